#pragma once
// Start-stop free coincidence counting on sorted time-tag streams: windowed
// cross/auto correlation histograms, sync-folded decay histograms, and pulsed
// g2 extraction from side-peak normalization.

#include <cstdint>
#include <vector>

#include "qdpair/montecarlo.hpp"

namespace qdp {

struct Histogram {
    std::int64_t start_ps = 0;     // left edge of bin 0
    std::int64_t bin_width_ps = 1;
    std::vector<std::uint64_t> counts;

    // floor((d - start)/width); bins are half-open [lo, lo + width)
    std::int64_t bin_of(std::int64_t delay_ps) const;
    std::int64_t bin_start(std::size_t k) const {
        return start_ps + static_cast<std::int64_t>(k) * bin_width_ps;
    }
    double bin_center(std::size_t k) const {
        return static_cast<double>(bin_start(k)) + 0.5 * static_cast<double>(bin_width_ps);
    }
    std::uint64_t total() const;
};

// All ordered pairs (a in ch_a, b in ch_b, distinct records) with
// |t_b - t_a| <= window (edges included) histogrammed by delay t_b - t_a in
// bins of bin_width starting at -window.  Single pass over the sorted stream
// with a sliding buffer; identical counting to the O(N^2) definition.
// ch_a == ch_b gives the (symmetric) auto-correlation.
Histogram cross_correlate(const TimeTagStream& tags, Channel ch_a, Channel ch_b,
                          std::int64_t window_ps, std::int64_t bin_width_ps);

// Brute-force reference used by tests and the acceptance suite.
Histogram cross_correlate_brute(const TimeTagStream& tags, Channel ch_a, Channel ch_b,
                                std::int64_t window_ps, std::int64_t bin_width_ps);

// Delay of each ch event relative to the most recent SYNC, folded modulo the
// sync period into [0, rep_period); events before the first SYNC are dropped.
Histogram sync_histogram(const TimeTagStream& tags, Channel ch, double rep_period_ps,
                         std::int64_t bin_width_ps);

struct G2Result {
    double g2 = 0.0;
    double sigma = 0.0;           // Poisson propagation through the peak ratio
    std::uint64_t central = 0;    // counts in the zero-delay peak window
    double side_mean = 0.0;       // mean side-peak window counts
    int n_side = 0;
};

// Pulsed g2(0): integrate one full repetition period around delay zero and
// around the first n_side_peaks side peaks on each side; g2 = central /
// mean(side).  Throws if the side peaks carry no counts or the histogram is
// too narrow for the requested peaks.
G2Result g2_pulsed(const Histogram& h, double rep_period_ps, int n_side_peaks);

// Sum groups of `factor` adjacent bins; a trailing partial group is dropped.
// Counts are conserved over the kept range.
Histogram rebin(const Histogram& h, int factor);

}  // namespace qdp

#include "qdpair/correlator.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace qdp {

std::int64_t Histogram::bin_of(std::int64_t delay_ps) const {
    const std::int64_t d = delay_ps - start_ps;
    // floor division for negative-safe binning
    return d >= 0 ? d / bin_width_ps : -((-d + bin_width_ps - 1) / bin_width_ps);
}

std::uint64_t Histogram::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

namespace {

Histogram make_corr_histogram(std::int64_t window_ps, std::int64_t bin_width_ps) {
    if (window_ps <= 0) throw std::invalid_argument("cross_correlate: window must be > 0");
    if (bin_width_ps < 1)
        throw std::invalid_argument("cross_correlate: bin width must be >= 1 ps");
    Histogram h;
    h.start_ps = -window_ps;
    h.bin_width_ps = bin_width_ps;
    // enough bins that delay = +window (inclusive) still lands inside
    h.counts.assign(static_cast<size_t>(2 * window_ps / bin_width_ps + 1), 0);
    return h;
}

inline void count_delay(Histogram& h, std::int64_t delay) {
    ++h.counts[static_cast<size_t>(h.bin_of(delay))];
}

}  // namespace

Histogram cross_correlate(const TimeTagStream& tags, Channel ch_a, Channel ch_b,
                          std::int64_t window_ps, std::int64_t bin_width_ps) {
    Histogram h = make_corr_histogram(window_ps, bin_width_ps);
    // Sliding buffer of recent channel-a times; every b event pairs with the
    // buffered a's in [t_b - window, t_b + window].  For a != b, scanning the
    // merged stream once and pairing each b against past a's AND each a
    // against past b's covers every pair exactly once; for a == b each
    // unordered pair is met once and counted in both delay signs.
    std::deque<std::int64_t> past_a, past_b;
    const bool same = ch_a == ch_b;
    for (const auto& tag : tags) {
        const bool is_a = tag.channel == ch_a;
        const bool is_b = tag.channel == ch_b;
        if (!is_a && !is_b) continue;
        if (is_a) {
            while (!past_b.empty() && tag.t_ps - past_b.front() > window_ps)
                past_b.pop_front();
            for (const auto tb : past_b) count_delay(h, tb - tag.t_ps);
            if (same)
                for (const auto tb : past_b) count_delay(h, tag.t_ps - tb);
        }
        if (is_b && !same) {
            while (!past_a.empty() && tag.t_ps - past_a.front() > window_ps)
                past_a.pop_front();
            for (const auto ta : past_a) count_delay(h, tag.t_ps - ta);
        }
        if (is_a) {
            if (same)
                past_b.push_back(tag.t_ps);
            else
                past_a.push_back(tag.t_ps);
        }
        if (is_b && !same) past_b.push_back(tag.t_ps);
    }
    return h;
}

Histogram cross_correlate_brute(const TimeTagStream& tags, Channel ch_a, Channel ch_b,
                                std::int64_t window_ps, std::int64_t bin_width_ps) {
    Histogram h = make_corr_histogram(window_ps, bin_width_ps);
    std::vector<std::int64_t> a_times, b_times;
    for (const auto& tag : tags) {
        if (tag.channel == ch_a) a_times.push_back(tag.t_ps);
        if (tag.channel == ch_b) b_times.push_back(tag.t_ps);
    }
    if (ch_a != ch_b) {
        for (const auto ta : a_times)
            for (const auto tb : b_times)
                if (std::llabs(tb - ta) <= window_ps) count_delay(h, tb - ta);
    } else {
        for (size_t i = 0; i < a_times.size(); ++i)
            for (size_t j = 0; j < a_times.size(); ++j)
                if (i != j && std::llabs(a_times[j] - a_times[i]) <= window_ps)
                    count_delay(h, a_times[j] - a_times[i]);
    }
    return h;
}

Histogram sync_histogram(const TimeTagStream& tags, Channel ch, double rep_period_ps,
                         std::int64_t bin_width_ps) {
    if (!(rep_period_ps > 0.0))
        throw std::invalid_argument("sync_histogram: rep period must be > 0");
    if (bin_width_ps < 1)
        throw std::invalid_argument("sync_histogram: bin width must be >= 1 ps");
    if (ch == Channel::SYNC)
        throw std::invalid_argument("sync_histogram: channel must not be SYNC");
    Histogram h;
    h.start_ps = 0;
    h.bin_width_ps = bin_width_ps;
    h.counts.assign(static_cast<size_t>(std::ceil(rep_period_ps / bin_width_ps)), 0);
    bool have_sync = false;
    std::int64_t last_sync = 0;
    std::uint64_t dropped = 0;
    for (const auto& tag : tags) {
        if (tag.channel == Channel::SYNC) {
            last_sync = tag.t_ps;
            have_sync = true;
            continue;
        }
        if (tag.channel != ch) continue;
        if (!have_sync) {
            ++dropped;  // nothing to reference against
            continue;
        }
        double d = static_cast<double>(tag.t_ps - last_sync);
        d -= std::floor(d / rep_period_ps) * rep_period_ps;  // fold into [0, period)
        auto bin = static_cast<size_t>(d / bin_width_ps);
        if (bin >= h.counts.size()) bin = h.counts.size() - 1;
        ++h.counts[bin];
    }
    (void)dropped;
    return h;
}

G2Result g2_pulsed(const Histogram& h, double rep_period_ps, int n_side_peaks) {
    if (n_side_peaks < 1) throw std::invalid_argument("g2_pulsed: need >= 1 side peak");
    if (!(rep_period_ps > 0.0)) throw std::invalid_argument("g2_pulsed: bad rep period");
    const std::int64_t hist_lo = h.start_ps;
    const std::int64_t hist_hi =
        h.start_ps + static_cast<std::int64_t>(h.counts.size()) * h.bin_width_ps;

    // integrate counts whose bin center falls within one period centered on
    // peak m * rep_period
    auto window_sum = [&](int m) -> std::uint64_t {
        const double center = m * rep_period_ps;
        const double lo = center - 0.5 * rep_period_ps;
        const double hi = center + 0.5 * rep_period_ps;
        if (lo < static_cast<double>(hist_lo) - 0.5 * h.bin_width_ps ||
            hi > static_cast<double>(hist_hi) + 0.5 * h.bin_width_ps)
            throw std::invalid_argument("g2_pulsed: histogram narrower than requested peaks");
        std::uint64_t s = 0;
        for (size_t k = 0; k < h.counts.size(); ++k) {
            const double c = h.bin_center(k);
            if (c >= lo && c < hi) s += h.counts[k];
        }
        return s;
    };

    G2Result r;
    r.central = window_sum(0);
    std::uint64_t side_total = 0;
    for (int m = 1; m <= n_side_peaks; ++m) {
        side_total += window_sum(m);
        side_total += window_sum(-m);
        r.n_side += 2;
    }
    if (side_total == 0)
        throw std::invalid_argument("g2_pulsed: side peaks carry no counts");
    r.side_mean = static_cast<double>(side_total) / r.n_side;
    r.g2 = static_cast<double>(r.central) / r.side_mean;
    // Poisson errors: var(central) = central (>= 1 count equivalent so a zero
    // peak still reports a scale), var(side_mean) = side_total / n_side^2
    const double var_c = static_cast<double>(std::max<std::uint64_t>(r.central, 1));
    const double var_s = static_cast<double>(side_total) / (r.n_side * r.n_side);
    r.sigma = std::sqrt(var_c / (r.side_mean * r.side_mean) +
                        var_s * r.g2 * r.g2 / (r.side_mean * r.side_mean));
    return r;
}

Histogram rebin(const Histogram& h, int factor) {
    if (factor < 1) throw std::invalid_argument("rebin: factor must be >= 1");
    Histogram out;
    out.start_ps = h.start_ps;
    out.bin_width_ps = h.bin_width_ps * factor;
    out.counts.assign(h.counts.size() / factor, 0);
    for (size_t k = 0; k < out.counts.size(); ++k)
        for (int j = 0; j < factor; ++j) out.counts[k] += h.counts[k * factor + j];
    return out;
}

}  // namespace qdp

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "qdpair/correlator.hpp"
#include "qdpair/montecarlo.hpp"
#include "qdpair/rng.hpp"

using namespace qdp;

namespace {

TimeTagStream random_stream(std::uint64_t seed, int n, std::int64_t t_max) {
    // dense random stream with plenty of timestamp collisions
    PulseRng rng(seed, 0);
    TimeTagStream tags;
    tags.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const auto t = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(t_max));
        const auto ch = static_cast<Channel>(static_cast<int>(rng.uniform() * 5.0));
        tags.push_back({t, ch});
    }
    std::sort(tags.begin(), tags.end());
    return tags;
}

}  // namespace

TEST_CASE("bin_of uses floor division on both sides of the start") {
    Histogram h;
    h.start_ps = -10;
    h.bin_width_ps = 3;
    CHECK(h.bin_of(-10) == 0);
    CHECK(h.bin_of(-8) == 0);
    CHECK(h.bin_of(-7) == 1);
    CHECK(h.bin_of(0) == 3);
    CHECK(h.bin_of(-11) == -1);
    CHECK(h.bin_of(-13) == -1);
    CHECK(h.bin_of(-14) == -2);
    CHECK(h.bin_start(0) == -10);
    CHECK(h.bin_center(0) == doctest::Approx(-8.5));
}

TEST_CASE("cross correlation of a tiny hand-built stream") {
    TimeTagStream tags = {
        {-7, Channel::X_T}, {0, Channel::XX_T}, {0, Channel::X_T},
        {3, Channel::X_T},  {100, Channel::XX_T},
    };
    const Histogram h = cross_correlate(tags, Channel::XX_T, Channel::X_T, 10, 1);
    CHECK(h.start_ps == -10);
    CHECK(h.bin_width_ps == 1);
    CHECK(h.counts.size() == 21);
    // pairs within +-10 of the XX_T at t=0: delays -7, 0, +3
    CHECK(h.total() == 3);
    CHECK(h.counts[static_cast<size_t>(h.bin_of(-7))] == 1);
    CHECK(h.counts[static_cast<size_t>(h.bin_of(0))] == 1);
    CHECK(h.counts[static_cast<size_t>(h.bin_of(3))] == 1);
}

TEST_CASE("cross correlation rejects bad windows") {
    TimeTagStream tags;
    CHECK_THROWS_AS(cross_correlate(tags, Channel::XX_T, Channel::X_T, 0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(cross_correlate(tags, Channel::XX_T, Channel::X_T, 100, 0),
                    std::invalid_argument);
}

TEST_CASE("streaming correlator equals the brute-force definition") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
        const TimeTagStream tags = random_stream(seed, 400, 2000);
        for (auto [a, b] : {std::pair{Channel::XX_T, Channel::X_T},
                            {Channel::X_R, Channel::XX_R},
                            {Channel::XX_T, Channel::XX_T}}) {
            for (std::int64_t window : {1, 17, 250, 3000}) {
                for (std::int64_t width : {1, 3, 16}) {
                    const Histogram fast = cross_correlate(tags, a, b, window, width);
                    const Histogram slow = cross_correlate_brute(tags, a, b, window, width);
                    REQUIRE(fast.counts.size() == slow.counts.size());
                    CHECK(fast.start_ps == slow.start_ps);
                    CHECK(fast.counts == slow.counts);
                }
            }
        }
    }
}

TEST_CASE("auto-correlation is symmetric and pairs every distinct record") {
    const TimeTagStream tags = random_stream(21, 500, 1500);
    const Histogram h = cross_correlate(tags, Channel::X_T, Channel::X_T, 1500, 1);
    std::uint64_t n_events = 0;
    for (const auto& t : tags) n_events += t.channel == Channel::X_T;
    // window covers the whole stream, so every ordered pair lands once
    CHECK(h.total() == n_events * (n_events - 1));
    const size_t n = h.counts.size();
    for (size_t k = 0; k < n; ++k) CHECK(h.counts[k] == h.counts[n - 1 - k]);
}

TEST_CASE("sync fold references the most recent sync and drops orphans") {
    TimeTagStream tags = {
        {-50, Channel::X_T},   // before any sync: dropped
        {0, Channel::SYNC},    {150, Channel::X_T},
        {1000, Channel::SYNC}, {1250, Channel::X_T},
        {2000, Channel::SYNC}, {2999, Channel::X_T},
        {3500, Channel::X_T},  // 1500 after last sync, folds to 500
        {3600, Channel::XX_T},  // other channel: ignored
    };
    const Histogram h = sync_histogram(tags, Channel::X_T, 1000.0, 1);
    CHECK(h.start_ps == 0);
    CHECK(h.counts.size() == 1000);
    CHECK(h.total() == 4);
    CHECK(h.counts[150] == 1);
    CHECK(h.counts[250] == 1);
    CHECK(h.counts[999] == 1);
    CHECK(h.counts[500] == 1);
}

TEST_CASE("sync fold validates its arguments") {
    TimeTagStream tags;
    CHECK_THROWS_AS(sync_histogram(tags, Channel::SYNC, 1000.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sync_histogram(tags, Channel::X_T, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sync_histogram(tags, Channel::X_T, 1000.0, 0), std::invalid_argument);
}

TEST_CASE("pulsed g2 from a hand-built histogram") {
    Histogram h;
    h.start_ps = -2500;
    h.bin_width_ps = 1;
    h.counts.assign(5001, 0);
    auto put = [&](std::int64_t d, std::uint64_t c) {
        h.counts[static_cast<size_t>(h.bin_of(d))] = c;
    };
    put(0, 50);
    put(1000, 100);
    put(-1000, 100);
    put(2000, 100);
    put(-2000, 100);
    const G2Result r = g2_pulsed(h, 1000.0, 2);
    CHECK(r.central == 50);
    CHECK(r.n_side == 4);
    CHECK(r.side_mean == doctest::Approx(100.0));
    CHECK(r.g2 == doctest::Approx(0.5));
    // Poisson propagation: var(c)/s^2 + var(s) g2^2 / s^2
    const double want_sigma =
        std::sqrt(50.0 / (100.0 * 100.0) + (400.0 / 16.0) * 0.25 / (100.0 * 100.0));
    CHECK(r.sigma == doctest::Approx(want_sigma).epsilon(1e-12));

    // asking for a third side peak overruns the histogram
    CHECK_THROWS_AS(g2_pulsed(h, 1000.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(g2_pulsed(h, 1000.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(g2_pulsed(h, -5.0, 1), std::invalid_argument);

    // empty side peaks are an error, not a divide-by-zero
    Histogram only_central = h;
    only_central.counts.assign(5001, 0);
    only_central.counts[static_cast<size_t>(only_central.bin_of(0))] = 9;
    CHECK_THROWS_AS(g2_pulsed(only_central, 1000.0, 2), std::invalid_argument);
}

TEST_CASE("g2 windows split cleanly between peaks on simulated-style combs") {
    // comb of identical peaks: g2 must be exactly 1 whatever the peak shape,
    // as long as the shape repeats with the period
    Histogram h;
    h.start_ps = -3500;
    h.bin_width_ps = 2;
    h.counts.assign(3501, 0);
    for (int m = -3; m <= 3; ++m) {
        for (std::int64_t off = -30; off <= 30; off += 2) {
            const auto k = static_cast<size_t>(h.bin_of(m * 1000 + off));
            h.counts[k] += static_cast<std::uint64_t>(40 - std::llabs(off));
        }
    }
    const G2Result r = g2_pulsed(h, 1000.0, 2);
    CHECK(r.g2 == doctest::Approx(1.0));
}

TEST_CASE("rebin conserves counts and drops the trailing partial group") {
    Histogram h;
    h.start_ps = -4;
    h.bin_width_ps = 2;
    h.counts = {1, 2, 3, 4, 5, 6, 7};
    const Histogram r3 = rebin(h, 3);
    CHECK(r3.start_ps == -4);
    CHECK(r3.bin_width_ps == 6);
    REQUIRE(r3.counts.size() == 2);
    CHECK(r3.counts[0] == 6);
    CHECK(r3.counts[1] == 15);
    const Histogram r1 = rebin(h, 1);
    CHECK(r1.counts == h.counts);
    CHECK_THROWS_AS(rebin(h, 0), std::invalid_argument);
}

TEST_CASE("streaming correlator equals brute force on a simulated stream") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 20000;
    d.eta_xx = 0.3;
    d.eta_x = 0.3;
    d.basis_first = Pol::D;
    d.basis_second = Pol::D;
    d.seed = 5;
    const TimeTagStream tags = simulate(p, d);
    const Histogram fast = cross_correlate(tags, Channel::XX_T, Channel::X_T, 2000, 4);
    const Histogram slow = cross_correlate_brute(tags, Channel::XX_T, Channel::X_T, 2000, 4);
    CHECK(fast.counts == slow.counts);
    CHECK(fast.total() > 0);
}

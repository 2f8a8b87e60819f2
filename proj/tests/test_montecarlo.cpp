#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "qdpair/correlator.hpp"
#include "qdpair/montecarlo.hpp"
#include "qdpair/rng.hpp"

using namespace qdp;

namespace {

std::uint64_t count_channel(const TimeTagStream& tags, Channel ch) {
    std::uint64_t n = 0;
    for (const auto& t : tags) n += t.channel == ch;
    return n;
}

// Simpson quadrature, n intervals (rounded up to even)
template <class F>
double simpson(F f, double lo, double hi, int n) {
    if (n % 2) ++n;
    const double h = (hi - lo) / n;
    double sum = f(lo) + f(hi);
    for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(lo + k * h);
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("channel names round-trip") {
    for (int c = 0; c <= 4; ++c) {
        const auto ch = static_cast<Channel>(c);
        CHECK(parse_channel(channel_name(ch)) == ch);
    }
    CHECK_THROWS_AS(parse_channel("BOGUS"), std::invalid_argument);
}

TEST_CASE("detection config validation") {
    DetectionConfig d;
    CHECK_NOTHROW(d.validate());
    auto bad = d;
    bad.eta_xx = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.prep_prob = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.rep_period_ps = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.dark_rate_hz = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.two_photon_prob = 1.0001;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.projection_accuracy = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("Born probabilities at landmark states") {
    const CascadeParams p;
    // rectilinear: the analyzer never sees the precession phase
    for (double tau : {0.0, 123.4, 700.0}) {
        const auto b = born_probabilities(tau, p, Pol::H, Pol::H);
        CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(b[1] == doctest::Approx(0.0));
        CHECK(b[2] == doctest::Approx(0.0));
        CHECK(b[3] == doctest::Approx(0.5).epsilon(1e-12));
    }
    // diagonal at zero delay: phi-plus correlates D with D
    const auto dd0 = born_probabilities(0.0, p, Pol::D, Pol::D);
    CHECK(dd0[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dd0[1] == doctest::Approx(0.0));
    // quarter precession period: diagonal outcomes decorrelate completely
    const auto ddq = born_probabilities(p.precession_period_ps() / 4, p, Pol::D, Pol::D);
    for (int k = 0; k < 4; ++k) CHECK(ddq[k] == doctest::Approx(0.25).epsilon(1e-10));
    // circular at zero delay: phi-plus anti-correlates R with R
    const auto rr0 = born_probabilities(0.0, p, Pol::R, Pol::R);
    CHECK(rr0[0] == doctest::Approx(0.0));
    CHECK(rr0[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rr0[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rr0[3] == doctest::Approx(0.0));

    CHECK_THROWS_AS(born_probabilities(-1.0, p, Pol::H, Pol::H), std::invalid_argument);
}

TEST_CASE("Born probabilities sum to one with maximally mixed marginals") {
    const CascadeParams p;
    PulseRng rng(3, 0);
    const Pol pols[] = {Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L};
    for (int trial = 0; trial < 100; ++trial) {
        const Pol b1 = pols[static_cast<int>(rng.uniform() * 6)];
        const Pol b2 = pols[static_cast<int>(rng.uniform() * 6)];
        const double tau = rng.uniform() * 2000.0;
        const auto b = born_probabilities(tau, p, b1, b2);
        CHECK(b[0] + b[1] + b[2] + b[3] == doctest::Approx(1.0).epsilon(1e-14));
        // each photon alone is unpolarized
        CHECK(b[0] + b[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(b[0] + b[2] == doctest::Approx(0.5).epsilon(1e-12));
        for (int k = 0; k < 4; ++k) CHECK(b[k] >= 0.0);
    }
}

TEST_CASE("simulation is deterministic and the parallel path matches the serial one") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 30000;
    d.prep_prob = 0.7;
    d.eta_xx = 0.4;
    d.eta_x = 0.35;
    d.dark_rate_hz = 1e8;
    d.two_photon_prob = 0.1;
    d.projection_accuracy = 0.9;
    d.basis_first = Pol::D;
    d.basis_second = Pol::D;
    d.seed = 99;
    const TimeTagStream a = simulate(p, d);
    const TimeTagStream b = simulate(p, d);
    const TimeTagStream c = simulate_serial(p, d);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(std::is_sorted(a.begin(), a.end()));

    DetectionConfig d2 = d;
    d2.seed = 100;
    CHECK(simulate(p, d2) != a);
}

TEST_CASE("one sync tag per pulse on the repetition grid") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 5000;
    d.eta_xx = 0.2;
    d.eta_x = 0.2;
    d.seed = 17;
    const TimeTagStream tags = simulate(p, d);
    CHECK(count_channel(tags, Channel::SYNC) == d.n_pulses);
    // spot-check grid positions
    std::vector<std::int64_t> syncs;
    for (const auto& t : tags)
        if (t.channel == Channel::SYNC) syncs.push_back(t.t_ps);
    std::sort(syncs.begin(), syncs.end());
    CHECK(syncs[0] == 0);
    CHECK(syncs[1] == std::llround(d.rep_period_ps));
    CHECK(syncs[4999] == std::llround(4999 * d.rep_period_ps));
}

TEST_CASE("arm yields follow preparation probability and efficiencies") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 200000;
    d.prep_prob = 0.8;
    d.eta_xx = 0.37;
    d.eta_x = 0.22;
    d.basis_first = Pol::D;
    d.basis_second = Pol::D;
    d.seed = 31;
    const TimeTagStream tags = simulate(p, d);
    const double n = static_cast<double>(d.n_pulses);
    const double mean_xx = n * d.prep_prob * d.eta_xx;
    const double mean_x = n * d.prep_prob * d.eta_x;
    const auto got_xx = static_cast<double>(count_channel(tags, Channel::XX_T) +
                                            count_channel(tags, Channel::XX_R));
    const auto got_x = static_cast<double>(count_channel(tags, Channel::X_T) +
                                           count_channel(tags, Channel::X_R));
    CHECK(std::abs(got_xx - mean_xx) < 5 * std::sqrt(mean_xx));
    CHECK(std::abs(got_x - mean_x) < 5 * std::sqrt(mean_x));
}

TEST_CASE("coincidence histogram matches the analytic model (chi-squared)") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 400000;
    d.eta_xx = 0.5;
    d.eta_x = 0.5;
    d.seed = 7;
    const TimeTagStream tags = simulate(p, d);
    const Histogram h = cross_correlate(tags, Channel::XX_T, Channel::X_T, 2000, 4);
    // expected counts per bin: pairs * integral of the H/H model density over
    // the bin, shifted half a tick for the integer rounding of the tags
    const double pairs = static_cast<double>(d.n_pulses) * d.eta_xx * d.eta_x;
    double chi2 = 0.0;
    int dof = 0;
    for (size_t k = 0; k < h.counts.size(); ++k) {
        const auto lo = static_cast<double>(h.bin_start(k));
        if (lo < -200.0 || lo >= 1200.0) continue;
        const double expect =
            pairs * simpson(
                        [&](double t) {
                            return model_coincidence(Pol::H, Pol::H, t, p);
                        },
                        lo - 0.5, lo + 3.5, 8);
        if (expect < 25.0) continue;
        const double diff = static_cast<double>(h.counts[k]) - expect;
        chi2 += diff * diff / expect;
        ++dof;
    }
    REQUIRE(dof > 250);
    CHECK(chi2 / dof > 0.7);
    CHECK(chi2 / dof < 1.35);
}

TEST_CASE("dark counts arrive at the configured rate, uniformly in time") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 50000;
    d.prep_prob = 0.0;  // darks only
    d.dark_rate_hz = 2e9;
    d.seed = 23;
    const TimeTagStream tags = simulate(p, d);
    const double mean = d.dark_rate_hz * d.rep_period_ps * 1e-12 *
                        static_cast<double>(d.n_pulses);
    for (int c = 0; c < 4; ++c) {
        const auto got = static_cast<double>(count_channel(tags, static_cast<Channel>(c)));
        CHECK(std::abs(got - mean) < 5 * std::sqrt(mean));
    }
    // uniform within the pulse window: fold and compare halves
    const Histogram fold = sync_histogram(tags, Channel::XX_T, d.rep_period_ps, 1);
    std::uint64_t first = 0, second = 0;
    for (size_t k = 0; k < fold.counts.size(); ++k)
        (k < fold.counts.size() / 2 ? first : second) += fold.counts[k];
    const double tot = static_cast<double>(first + second);
    CHECK(std::abs(static_cast<double>(first) - tot / 2) < 5 * std::sqrt(tot / 4));
}

TEST_CASE("multiphoton fraction adds second cascades at the documented rate") {
    CascadeParams p;
    DetectionConfig d;
    d.n_pulses = 100000;
    d.eta_xx = 1.0;
    d.eta_x = 1.0;
    d.two_photon_prob = 0.3;
    d.seed = 41;
    const TimeTagStream tags = simulate(p, d);
    const double p2 = 0.3 / (2.0 - 0.3);
    const double mean = static_cast<double>(d.n_pulses) * (1.0 + p2);
    const auto got = static_cast<double>(count_channel(tags, Channel::XX_T) +
                                         count_channel(tags, Channel::XX_R));
    CHECK(std::abs(got - mean) < 5 * std::sqrt(mean));
}

TEST_CASE("projection depolarization washes out the port correlations") {
    CascadeParams p;
    DetectionConfig base;
    base.n_pulses = 100000;
    base.eta_xx = 1.0;
    base.eta_x = 1.0;
    base.seed = 59;

    auto tt_fraction = [&](double accuracy) {
        DetectionConfig d = base;
        d.projection_accuracy = accuracy;
        const TimeTagStream tags = simulate(p, d);
        const Histogram h = cross_correlate(tags, Channel::XX_T, Channel::X_T, 3000, 10);
        return static_cast<double>(h.total()) / static_cast<double>(d.n_pulses);
    };
    const double n = static_cast<double>(base.n_pulses);
    // H/H with perfect projection: joint transmit probability is exactly 1/2
    CHECK(std::abs(tt_fraction(1.0) - 0.5) < 5 * std::sqrt(0.25 / n));
    // fair-coin outcomes: joint transmit probability collapses to 1/4
    CHECK(std::abs(tt_fraction(0.0) - 0.25) < 5 * std::sqrt(0.1875 / n));
}

#include "qdpair/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "qdpair/rng.hpp"

namespace qdp {

char const* channel_name(Channel c) {
    switch (c) {
        case Channel::XX_T: return "XX_T";
        case Channel::XX_R: return "XX_R";
        case Channel::X_T: return "X_T";
        case Channel::X_R: return "X_R";
        case Channel::SYNC: return "SYNC";
    }
    throw std::invalid_argument("channel_name: bad channel");
}

Channel parse_channel(const std::string& name) {
    for (int c = 0; c <= 4; ++c)
        if (name == channel_name(static_cast<Channel>(c))) return static_cast<Channel>(c);
    throw std::invalid_argument("parse_channel: unknown channel '" + name + "'");
}

void DetectionConfig::validate() const {
    if (!(rep_period_ps > 0.0))
        throw std::invalid_argument("DetectionConfig: rep_period must be > 0");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(prep_prob) || !unit(eta_xx) || !unit(eta_x) || !unit(projection_accuracy) ||
        !unit(two_photon_prob))
        throw std::invalid_argument("DetectionConfig: probabilities must be in [0, 1]");
    if (!(dark_rate_hz >= 0.0))
        throw std::invalid_argument("DetectionConfig: dark rate must be >= 0");
}

std::array<double, 4> born_probabilities(double delta_tau_ps, const CascadeParams& p,
                                         Pol basis1, Pol basis2) {
    p.validate();
    if (delta_tau_ps < 0.0)
        throw std::invalid_argument("born_probabilities: delta_tau must be >= 0");
    const Vec4 psi = cascade_ket(delta_tau_ps, p.fss_uev);
    const Vec2 k1 = ket(basis1), k1o = ket(orthogonal(basis1));
    const Vec2 k2 = ket(basis2), k2o = ket(orthogonal(basis2));
    std::array<double, 4> out{};
    const std::array<const Vec2*, 2> first{&k1, &k1o}, second{&k2, &k2o};
    for (int o1 = 0; o1 < 2; ++o1)
        for (int o2 = 0; o2 < 2; ++o2) {
            const cplx amp = inner(kron(*first[o1], *second[o2]), psi);
            out[2 * o1 + o2] = std::norm(amp);
        }
    // the four projectors resolve the identity; renormalize away the last ulps
    const double sum = out[0] + out[1] + out[2] + out[3];
    for (auto& v : out) v /= sum;
    return out;
}

namespace {

// One prepared cascade: decay delays, joint projection outcome, projection
// depolarization, detection losses, jitter, integer-ps rounding.  The draw
// order below is part of the reproducibility contract.
void emit_cascade(PulseRng& rng, double pulse_t, const CascadeParams& p,
                  const DetectionConfig& d, double sigma1, TimeTagStream& out) {
    const double t_xx = rng.exponential(p.t1_xx_ps);
    const double dtau = rng.exponential(p.t1_x_ps);
    const auto born = born_probabilities(dtau, p, d.basis_first, d.basis_second);
    const double u = rng.uniform();
    int idx = 0;
    double acc = 0.0;
    for (; idx < 3; ++idx) {
        acc += born[idx];
        if (u < acc) break;
    }
    int o1 = (idx >> 1) & 1, o2 = idx & 1;  // 0 = transmit port, 1 = reflect
    if (d.projection_accuracy < 1.0) {
        if (rng.uniform() >= d.projection_accuracy) o1 = rng.uniform() < 0.5 ? 0 : 1;
        if (rng.uniform() >= d.projection_accuracy) o2 = rng.uniform() < 0.5 ? 0 : 1;
    }
    if (rng.uniform() < d.eta_xx) {
        const double t = pulse_t + t_xx + sigma1 * rng.gaussian();
        out.push_back({std::llround(t), o1 ? Channel::XX_R : Channel::XX_T});
    }
    if (rng.uniform() < d.eta_x) {
        const double t = pulse_t + t_xx + dtau + sigma1 * rng.gaussian();
        out.push_back({std::llround(t), o2 ? Channel::X_R : Channel::X_T});
    }
}

void simulate_pulse(std::uint64_t pulse, const CascadeParams& p, const DetectionConfig& d,
                    double second_pair_prob, double dark_mean, TimeTagStream& out) {
    PulseRng rng(d.seed, pulse);
    const double pulse_t = static_cast<double>(pulse) * d.rep_period_ps;
    out.push_back({std::llround(pulse_t), Channel::SYNC});
    const double sigma1 = p.sigma_1p_ps();
    if (rng.uniform() < d.prep_prob) {
        emit_cascade(rng, pulse_t, p, d, sigma1, out);
        if (second_pair_prob > 0.0 && rng.uniform() < second_pair_prob)
            emit_cascade(rng, pulse_t, p, d, sigma1, out);
    }
    if (dark_mean > 0.0) {
        for (int ch = 0; ch < 4; ++ch) {
            const std::uint64_t k = rng.poisson(dark_mean);
            for (std::uint64_t i = 0; i < k; ++i) {
                const double t = pulse_t + rng.uniform() * d.rep_period_ps;
                out.push_back({std::llround(t), static_cast<Channel>(ch)});
            }
        }
    }
}

}  // namespace

TimeTagStream simulate_serial(const CascadeParams& p, const DetectionConfig& d) {
    p.validate();
    d.validate();
    const double p2 = d.two_photon_prob / (2.0 - d.two_photon_prob);
    const double dark_mean = d.dark_rate_hz * d.rep_period_ps * 1e-12;
    TimeTagStream out;
    out.reserve(d.n_pulses + static_cast<std::uint64_t>(
                                 d.n_pulses * d.prep_prob * (d.eta_xx + d.eta_x) * 1.05));
    for (std::uint64_t pulse = 0; pulse < d.n_pulses; ++pulse)
        simulate_pulse(pulse, p, d, p2, dark_mean, out);
    std::sort(out.begin(), out.end());
    return out;
}

TimeTagStream simulate(const CascadeParams& p, const DetectionConfig& d) {
    p.validate();
    d.validate();
    const double p2 = d.two_photon_prob / (2.0 - d.two_photon_prob);
    const double dark_mean = d.dark_rate_hz * d.rep_period_ps * 1e-12;
    constexpr std::uint64_t kBlock = 65536;
    const std::uint64_t n_blocks = (d.n_pulses + kBlock - 1) / kBlock;
    std::vector<TimeTagStream> parts(n_blocks);
#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < static_cast<long>(n_blocks); ++b) {
        const std::uint64_t lo = b * kBlock;
        const std::uint64_t hi = std::min(lo + kBlock, d.n_pulses);
        auto& part = parts[b];
        part.reserve(static_cast<size_t>((hi - lo) * 1.2) + 16);
        for (std::uint64_t pulse = lo; pulse < hi; ++pulse)
            simulate_pulse(pulse, p, d, p2, dark_mean, part);
    }
    TimeTagStream out;
    size_t total = 0;
    for (const auto& part : parts) total += part.size();
    out.reserve(total);
    for (const auto& part : parts) out.insert(out.end(), part.begin(), part.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace qdp

#include "qdpair/cascade_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qdpair/special.hpp"

namespace qdp {

namespace {
constexpr double pi = std::numbers::pi;
using cd = std::complex<double>;
}  // namespace

void CascadeParams::validate() const {
    if (!(t1_x_ps > 0.0) || !(t1_xx_ps > 0.0))
        throw std::invalid_argument("CascadeParams: lifetimes must be > 0");
    if (!(fss_uev >= 0.0))
        throw std::invalid_argument("CascadeParams: fss must be >= 0");
    if (!(jitter_1p_fwhm_ps >= 0.0))
        throw std::invalid_argument("CascadeParams: jitter must be >= 0");
}

double CascadeParams::jitter_2p_fwhm_ps() const {
    return std::sqrt(2.0) * jitter_1p_fwhm_ps;
}

double CascadeParams::sigma_1p_ps() const { return jitter_1p_fwhm_ps / kFwhmPerSigma; }

double CascadeParams::sigma_2p_ps() const { return jitter_2p_fwhm_ps() / kFwhmPerSigma; }

double theory_coincidence(const PoincareCoord& i, const PoincareCoord& j,
                          double delta_tau_ps, const CascadeParams& p) {
    p.validate();
    if (delta_tau_ps < 0.0)
        throw std::invalid_argument("theory_coincidence: delta_tau must be >= 0");
    const double phi = 0.5 * (i.phi + j.phi) +
                       pi * delta_tau_ps * p.fss_uev / kPlanckUevPs;
    const double re = std::cos(0.5 * (i.theta - j.theta)) * std::cos(phi);
    const double im = std::cos(0.5 * (i.theta + j.theta)) * std::sin(phi);
    return std::exp(-delta_tau_ps / p.t1_x_ps) / (2.0 * p.t1_x_ps) * (re * re + im * im);
}

double theory_coincidence(Pol i, Pol j, double delta_tau_ps, const CascadeParams& p) {
    return theory_coincidence(basis_coords(i), basis_coords(j), delta_tau_ps, p);
}

double model_coincidence(const PoincareCoord& i, const PoincareCoord& j,
                         double delta_tau_ps, const CascadeParams& p) {
    p.validate();
    const double sigma = p.sigma_2p_ps();
    if (sigma == 0.0)
        return delta_tau_ps < 0.0 ? 0.0 : theory_coincidence(i, j, delta_tau_ps, p);
    // The polarization bracket is A + B cos(omega dt + psi); convolving each
    // term with the jitter Gaussian gives real and complex-rate emg kernels.
    const double a = 0.5 * (1.0 + std::cos(i.theta) * std::cos(j.theta));
    const double b = 0.5 * std::sin(i.theta) * std::sin(j.theta);
    const double psi = i.phi + j.phi;
    const double omega = 2.0 * pi * p.fss_uev / kPlanckUevPs;
    const double rate = 1.0 / p.t1_x_ps;
    const double e1 = emg(delta_tau_ps, rate, sigma);
    const cd e2 = emg(delta_tau_ps, cd(rate, -omega), sigma);
    return (a * e1 + b * (std::polar(1.0, psi) * e2).real()) / (2.0 * p.t1_x_ps);
}

double model_coincidence(Pol i, Pol j, double delta_tau_ps, const CascadeParams& p) {
    return model_coincidence(basis_coords(i), basis_coords(j), delta_tau_ps, p);
}

std::vector<double> eval_model_grid_serial(const PoincareCoord& i, const PoincareCoord& j,
                                           const std::vector<double>& delays_ps,
                                           const CascadeParams& p) {
    std::vector<double> out(delays_ps.size());
    for (size_t k = 0; k < delays_ps.size(); ++k)
        out[k] = model_coincidence(i, j, delays_ps[k], p);
    return out;
}

std::vector<double> eval_model_grid(const PoincareCoord& i, const PoincareCoord& j,
                                    const std::vector<double>& delays_ps,
                                    const CascadeParams& p) {
    std::vector<double> out(delays_ps.size());
    const long n = static_cast<long>(delays_ps.size());
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k)
        out[k] = model_coincidence(i, j, delays_ps[k], p);
    return out;
}

double lifetime_curve_xx(double tau_ps, const CascadeParams& p) {
    p.validate();
    return emg(tau_ps, 1.0 / p.t1_xx_ps, p.sigma_1p_ps()) / p.t1_xx_ps;
}

double lifetime_curve_x(double tau_ps, const CascadeParams& p) {
    p.validate();
    const double tx = p.t1_x_ps, txx = p.t1_xx_ps, sigma = p.sigma_1p_ps();
    if (sigma == 0.0 && tau_ps < 0.0) return 0.0;
    if (std::abs(tx - txx) < 1e-9 * tx) {
        // degenerate lifetimes: exp*exp collapses to t exp(-t/T)/T^2, whose
        // jitter convolution is (t - sigma^2/T) emg + sigma^2 gauss, all /T^2
        const double t = tx;
        if (sigma == 0.0) return tau_ps * std::exp(-tau_ps / t) / (t * t);
        return ((tau_ps - sigma * sigma / t) * emg(tau_ps, 1.0 / t, sigma) +
                sigma * sigma * gauss_pdf(tau_ps, sigma)) /
               (t * t);
    }
    if (sigma == 0.0)
        return (std::exp(-tau_ps / tx) - std::exp(-tau_ps / txx)) / (tx - txx);
    return (emg(tau_ps, 1.0 / tx, sigma) - emg(tau_ps, 1.0 / txx, sigma)) / (tx - txx);
}

double fss_energy_shift(double angle_deg, double amplitude_uev, double phase_rad,
                        double offset_uev) {
    return offset_uev +
           0.5 * amplitude_uev * std::sin(4.0 * angle_deg * pi / 180.0 + phase_rad);
}

double rabi_rate(double power, double pi_power, double max_rate) {
    if (!(pi_power > 0.0)) throw std::invalid_argument("rabi_rate: pi_power must be > 0");
    if (power < 0.0) throw std::invalid_argument("rabi_rate: power must be >= 0");
    const double s = std::sin(0.5 * pi * std::sqrt(power / pi_power));
    return max_rate * s * s;
}

namespace {

// Simpson integral of emg(t; lambda) over [lo, hi], ~1 ps resolution.
cd integrate_emg(double lo, double hi, cd lambda, double sigma) {
    const int n = std::max(8, 2 * static_cast<int>(std::ceil(0.5 * (hi - lo))));
    const double h = (hi - lo) / n;
    cd sum = emg(lo, lambda, sigma) + emg(hi, lambda, sigma);
    for (int k = 1; k < n; ++k)
        sum += (k % 2 ? 4.0 : 2.0) * emg(lo + k * h, lambda, sigma);
    return sum * (h / 3.0);
}

}  // namespace

double negativity_model(double lo_ps, double hi_ps, const CascadeParams& p) {
    p.validate();
    if (!(hi_ps > lo_ps)) throw std::invalid_argument("negativity_model: empty bin");
    const double omega = 2.0 * pi * p.fss_uev / kPlanckUevPs;
    const double rate = 1.0 / p.t1_x_ps;
    const double sigma = p.sigma_2p_ps();
    const cd corner = integrate_emg(lo_ps, hi_ps, cd(rate, omega), sigma);
    const double pop = integrate_emg(lo_ps, hi_ps, cd(rate, 0.0), sigma).real();
    if (pop <= 0.0) return 0.0;
    return std::abs(corner) / pop;
}

double negativity_model_depolarized(double lo_ps, double hi_ps, const CascadeParams& p,
                                    double projection_accuracy) {
    const double a2 = projection_accuracy * projection_accuracy;
    const double kappa = negativity_model(lo_ps, hi_ps, p);
    return std::max(0.0, a2 * kappa - 0.5 * (1.0 - a2));
}

}  // namespace qdp

#include "qdpair/fitters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qdpair/special.hpp"

namespace qdp {
namespace {

constexpr double kPi = std::numbers::pi;

// Solve A x = b (A symmetric positive-ish, small) by Gaussian elimination with
// partial pivoting.  Returns false when the pivot ratio says the system is
// numerically singular; cond_estimate gets max|pivot| / min|pivot|.
bool solve_normal(std::vector<double> a, std::vector<double> b, std::size_t n,
                  std::vector<double>& x, double& cond_estimate) {
    double max_piv = 0.0;
    double min_piv = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        const double p = a[col * n + col];
        const double ap = std::abs(p);
        if (col == 0) {
            max_piv = min_piv = ap;
        } else {
            max_piv = std::max(max_piv, ap);
            min_piv = std::min(min_piv, ap);
        }
        if (ap < 1e-300) {
            cond_estimate = std::numeric_limits<double>::infinity();
            return false;
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / p;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    cond_estimate = max_piv / min_piv;
    if (!(cond_estimate < 1e14)) return false;
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
        x[ri] = s / a[ri * n + ri];
    }
    return true;
}

double chi2_of(const FitData& d, const ModelFn& model, const std::vector<double>& p,
               const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const double r = (d.y[i] - model(d.x[i], p)) * w[i];
        s += r * r;
    }
    return s;
}

}  // namespace

FitResult least_squares_fit(const FitData& data, const ModelFn& model,
                            std::vector<double> initial_params, const FitOptions& opts) {
    const std::size_t n = data.x.size();
    const std::size_t np = initial_params.size();
    if (n == 0) throw std::invalid_argument("least_squares_fit: no data");
    if (data.y.size() != n) throw std::invalid_argument("least_squares_fit: x/y size mismatch");
    if (!data.sigma.empty() && data.sigma.size() != n)
        throw std::invalid_argument("least_squares_fit: sigma size mismatch");
    if (np == 0) throw std::invalid_argument("least_squares_fit: no parameters");
    if (n < np) throw std::invalid_argument("least_squares_fit: fewer points than parameters");

    std::vector<double> w(n);  // 1/sigma
    for (std::size_t i = 0; i < n; ++i) {
        double s;
        if (data.sigma.empty()) {
            s = std::sqrt(std::max(data.y[i], 1.0));  // Poisson counts; empty bins get 1
        } else {
            s = data.sigma[i];
            if (!(s > 0.0)) throw std::invalid_argument("least_squares_fit: sigma must be > 0");
        }
        w[i] = 1.0 / s;
    }

    std::vector<double> p = std::move(initial_params);
    double chi2 = chi2_of(data, model, p, w);
    double lambda = opts.lambda_init;

    std::vector<double> resid(n), jac(n * np);
    std::vector<double> jtj(np * np), jtr(np), step, trial(np);

    FitResult out;
    out.names.assign(np, "");
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        // residuals and forward-difference Jacobian at the current point
        for (std::size_t i = 0; i < n; ++i) resid[i] = (data.y[i] - model(data.x[i], p)) * w[i];
        for (std::size_t j = 0; j < np; ++j) {
            const double h = 1e-6 * std::max(std::abs(p[j]), 1e-6);
            std::vector<double> pj = p;
            pj[j] += h;
            for (std::size_t i = 0; i < n; ++i)
                jac[i * np + j] = ((data.y[i] - model(data.x[i], pj)) * w[i] - resid[i]) / h;
        }
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < np; ++j) {
                jtr[j] -= jac[i * np + j] * resid[i];  // J^T r with our residual sign
                for (std::size_t k = j; k < np; ++k)
                    jtj[j * np + k] += jac[i * np + j] * jac[i * np + k];
            }
        }
        for (std::size_t j = 0; j < np; ++j)
            for (std::size_t k = 0; k < j; ++k) jtj[j * np + k] = jtj[k * np + j];

        double gmax = 0.0;
        for (double g : jtr) gmax = std::max(gmax, std::abs(g));
        if (gmax < opts.grad_tol) {
            out.converged = true;
            break;
        }

        // damped step; inflate lambda until a step is accepted
        bool accepted = false;
        bool solvable = false;
        double last_cond = 0.0;
        for (int tries = 0; tries < 40; ++tries) {
            std::vector<double> damped = jtj;
            for (std::size_t j = 0; j < np; ++j) damped[j * np + j] *= 1.0 + lambda;
            double cond;
            if (!solve_normal(damped, jtr, np, step, cond)) {
                last_cond = cond;
                lambda *= 10.0;
                continue;
            }
            solvable = true;
            for (std::size_t j = 0; j < np; ++j) trial[j] = p[j] + step[j];
            const double trial_chi2 = chi2_of(data, model, trial, w);
            if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
                const double rel = (chi2 - trial_chi2) / std::max(chi2, 1e-300);
                p = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (rel < opts.rel_chi2_tol) out.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted || out.converged) {
            if (!accepted) {
                // damping cannot fix a structurally singular system (a
                // parameter the data do not constrain); that is an input
                // problem, not a minimum
                if (!solvable)
                    throw std::runtime_error(
                        "least_squares_fit: singular normal equations (cond estimate " +
                        std::to_string(last_cond) + ")");
                out.converged = true;  // no downhill step at any damping: at a minimum
            }
            break;
        }
    }

    // covariance from the undamped normal matrix at the solution
    for (std::size_t i = 0; i < n; ++i) resid[i] = (data.y[i] - model(data.x[i], p)) * w[i];
    for (std::size_t j = 0; j < np; ++j) {
        const double h = 1e-6 * std::max(std::abs(p[j]), 1e-6);
        std::vector<double> pj = p;
        pj[j] += h;
        for (std::size_t i = 0; i < n; ++i)
            jac[i * np + j] = ((data.y[i] - model(data.x[i], pj)) * w[i] - resid[i]) / h;
    }
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < np; ++j)
            for (std::size_t k = j; k < np; ++k)
                jtj[j * np + k] += jac[i * np + j] * jac[i * np + k];
    for (std::size_t j = 0; j < np; ++j)
        for (std::size_t k = 0; k < j; ++k) jtj[j * np + k] = jtj[k * np + j];

    out.params = p;
    out.chi2 = chi2;
    out.chi2_reduced = (n > np) ? chi2 / double(n - np) : chi2;
    out.iterations = iter;
    out.sigmas.assign(np, 0.0);
    // invert J^T J column by column; on singularity leave sigmas at 0
    for (std::size_t j = 0; j < np; ++j) {
        std::vector<double> e(np, 0.0);
        e[j] = 1.0;
        std::vector<double> col;
        double cond;
        if (solve_normal(jtj, e, np, col, cond) && col[j] > 0.0)
            out.sigmas[j] = std::sqrt(col[j]);
    }
    return out;
}

FitResult fit_lifetime(const Histogram& h, LifetimeKind kind, const CascadeParams& p,
                       double fit_lo_ps, double fit_hi_ps, bool fit_jitter) {
    p.validate();
    if (!(fit_lo_ps < fit_hi_ps)) throw std::invalid_argument("fit_lifetime: bad fit window");

    FitData d;
    std::size_t populated = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double c = h.bin_center(i);
        if (c < fit_lo_ps || c >= fit_hi_ps) continue;
        d.x.push_back(c);
        d.y.push_back(double(h.counts[i]));
        if (h.counts[i] > 0) ++populated;
    }
    if (populated < 10) throw std::invalid_argument("fit_lifetime: fewer than 10 populated bins");

    const bool is_x = kind == LifetimeKind::X;
    CascadeParams base = p;  // carries the fixed feeding time and jitter

    // params: lifetime, amplitude, t0, background [, jitter FWHM]; the shape is
    // the shipped lifetime curve so the fit and the model cannot drift apart
    ModelFn model = [=](double t, const std::vector<double>& q) mutable {
        const double tau = q[0];
        const double amp = q[1];
        const double t0 = q[2];
        const double bg = q[3];
        if (tau <= 1.0) return 1e12;  // steer the fitter away from nonsense
        if (fit_jitter) {
            if (q[4] < 0.0) return 1e12;
            base.jitter_1p_fwhm_ps = q[4];
        }
        if (is_x) base.t1_x_ps = tau;
        else base.t1_xx_ps = tau;
        const double ts = t - t0;
        const double shape = is_x ? lifetime_curve_x(ts, base) : lifetime_curve_xx(ts, base);
        return amp * shape + bg;
    };

    // moment-based initial guesses from the windowed data
    double peak = 0.0, peak_t = d.x.front();
    for (std::size_t i = 0; i < d.x.size(); ++i)
        if (d.y[i] > peak) peak = d.y[i], peak_t = d.x[i];
    double tail_floor = 0.0;
    for (std::size_t i = d.x.size() > 8 ? d.x.size() - 8 : 0; i < d.x.size(); ++i)
        tail_floor += d.y[i];
    tail_floor /= std::min<std::size_t>(8, d.x.size());

    // the shape is a density, so scale the peak count by the shape's own peak
    // value; an amplitude guess off by orders of magnitude makes the first
    // damped steps drag the nonlinear parameters off the map
    const double tau0 = is_x ? p.t1_x_ps : p.t1_xx_ps;
    const double t0_guess = peak_t - tau0 * 0.5;
    double shape_peak = 0.0;
    for (double ts = 0.0; ts <= 3.0 * tau0; ts += tau0 / 16.0)
        shape_peak = std::max(shape_peak, is_x ? lifetime_curve_x(ts, base)
                                               : lifetime_curve_xx(ts, base));
    const double amp0 = std::max(peak - tail_floor, 1.0) / std::max(shape_peak, 1e-12);

    std::vector<double> init = {tau0, amp0, t0_guess, tail_floor};
    if (fit_jitter) init.push_back(std::max(p.jitter_1p_fwhm_ps, 10.0));

    FitResult r = least_squares_fit(d, model, init);
    r.names = {"lifetime_ps", "amplitude", "t0_ps", "background"};
    if (fit_jitter) r.names.push_back("jitter_fwhm_ps");
    return r;
}

FitResult fit_fss(const std::vector<FssScanRow>& rows, double noise_sigma_uev) {
    if (rows.size() < 8) throw std::invalid_argument("fit_fss: need at least 8 angles");
    double a_lo = rows[0].angle_deg, a_hi = rows[0].angle_deg;
    for (const auto& r : rows) {
        a_lo = std::min(a_lo, r.angle_deg);
        a_hi = std::max(a_hi, r.angle_deg);
    }
    if (a_hi - a_lo < 90.0)
        throw std::invalid_argument("fit_fss: angle scan must span at least 90 degrees");

    // Stack both branches into one data set; x carries the angle, a parity tag
    // in the fractional part selects the branch (x >= 0 -> X, < 0 -> XX shifted).
    FitData d;
    for (const auto& r : rows) {
        d.x.push_back(r.angle_deg);
        d.y.push_back(r.e_x_uev);
        d.x.push_back(-(r.angle_deg + 1e4));  // branch tag, recovered in the model
        d.y.push_back(r.e_xx_uev);
    }
    if (noise_sigma_uev > 0.0) d.sigma.assign(d.x.size(), noise_sigma_uev);
    else d.sigma.assign(d.x.size(), 1e-3);  // energies are not counts; flat weight

    // params: fss_uev, phase_rad, offset_x_uev, offset_xx_uev
    ModelFn model = [](double x, const std::vector<double>& q) {
        const bool is_xx = x < -5e3;
        const double angle = is_xx ? (-x - 1e4) : x;
        const double osc = q[0] / 2.0 * std::sin(4.0 * angle * kPi / 180.0 + q[1]);
        return is_xx ? q[3] - osc : q[2] + osc;
    };

    // seed: offsets from branch means, amplitude from half the X peak-to-peak
    double mean_x = 0.0, mean_xx = 0.0, min_x = rows[0].e_x_uev, max_x = rows[0].e_x_uev;
    for (const auto& r : rows) {
        mean_x += r.e_x_uev;
        mean_xx += r.e_xx_uev;
        min_x = std::min(min_x, r.e_x_uev);
        max_x = std::max(max_x, r.e_x_uev);
    }
    mean_x /= double(rows.size());
    mean_xx /= double(rows.size());

    // stage one: the model is linear in the amplitude and offsets at fixed
    // phase, so scan four phase quadrants with never-singular linear fits
    FitResult pre;
    double pre_ph = 0.0;
    double best_chi2 = std::numeric_limits<double>::infinity();
    for (double ph : {0.0, kPi / 2, kPi, 3 * kPi / 2}) {
        ModelFn fixed_phase = [ph](double x, const std::vector<double>& q) {
            const bool is_xx = x < -5e3;
            const double angle = is_xx ? (-x - 1e4) : x;
            const double osc = q[0] / 2.0 * std::sin(4.0 * angle * kPi / 180.0 + ph);
            return is_xx ? q[2] - osc : q[1] + osc;
        };
        FitResult r = least_squares_fit(d, fixed_phase, {max_x - min_x, mean_x, mean_xx});
        if (r.chi2 < best_chi2) {
            best_chi2 = r.chi2;
            pre = r;
            pre_ph = ph;
        }
    }

    // stage two: free the phase and polish; a vanishing amplitude leaves the
    // phase unconstrained (singular), in which case the linear result stands
    FitResult best;
    try {
        best = least_squares_fit(
            d, model, {pre.params[0], pre_ph, pre.params[1], pre.params[2]});
    } catch (const std::runtime_error&) {
        best = pre;
        best.params = {pre.params[0], pre_ph, pre.params[1], pre.params[2]};
        best.sigmas = {pre.sigmas[0], 0.0, pre.sigmas[1], pre.sigmas[2]};
        const auto dof = static_cast<double>(d.x.size()) - 4.0;
        best.chi2_reduced = dof > 0 ? best.chi2 / dof : best.chi2;
    }
    // canonicalize: amplitude >= 0, phase in [0, 2pi)
    if (best.params[0] < 0.0) {
        best.params[0] = -best.params[0];
        best.params[1] += kPi;
    }
    best.params[1] = std::fmod(best.params[1], 2 * kPi);
    if (best.params[1] < 0.0) best.params[1] += 2 * kPi;
    best.names = {"fss_uev", "phase_rad", "offset_x_uev", "offset_xx_uev"};
    return best;
}

RabiFit fit_rabi(const std::vector<RabiRow>& rows, double rep_rate_hz) {
    if (rows.size() < 5) throw std::invalid_argument("fit_rabi: need at least 5 power points");
    if (!(rep_rate_hz > 0.0)) throw std::invalid_argument("fit_rabi: rep rate must be > 0");

    FitData d;
    double max_rate = 0.0, max_power = 0.0, power_at_max = rows[0].power_uw;
    for (const auto& r : rows) {
        if (r.power_uw < 0.0) throw std::invalid_argument("fit_rabi: negative power");
        d.x.push_back(r.power_uw);
        d.y.push_back(r.rate_hz);
        if (r.rate_hz > max_rate) {
            max_rate = r.rate_hz;
            power_at_max = r.power_uw;
        }
        max_power = std::max(max_power, r.power_uw);
    }
    d.sigma.assign(d.x.size(), std::max(max_rate, 1.0) * 1e-3);  // rates, not raw counts

    ModelFn model = [](double pw, const std::vector<double>& q) {
        if (q[0] <= 0.0) return 1e18;
        return rabi_rate(pw, q[0], q[1]);
    };

    std::vector<double> init = {std::max(power_at_max, 1e-3), std::max(max_rate, 1.0)};
    RabiFit out;
    out.fit = least_squares_fit(d, model, init);
    out.fit.names = {"pi_power_uw", "max_rate_hz"};
    if (max_power < out.fit.params[0] / 4.0)
        throw std::runtime_error(
            "fit_rabi: no curvature; every point sits below a quarter of the fitted pi power");
    out.scan_covers_pi_power = max_power >= out.fit.params[0];
    out.pulse_energy_j_at_pi = out.fit.params[0] * 1e-6 / rep_rate_hz;
    return out;
}

PsfFit fit_psf(const FocalMap& map) {
    const std::size_t nx = map.x_um.size();
    const std::size_t ny = map.y_um.size();
    if (nx < 5 || ny < 5) throw std::invalid_argument("fit_psf: map too small");
    if (map.value.size() != nx * ny) throw std::invalid_argument("fit_psf: value size mismatch");

    std::size_t px = 0, py = 0;
    double peak = map.value[0];
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
            if (map.at(ix, iy) > peak) {
                peak = map.at(ix, iy);
                px = ix;
                py = iy;
            }
    if (px == 0 || px == nx - 1 || py == 0 || py == ny - 1)
        throw std::runtime_error("fit_psf: peak on map boundary; enlarge the scan");

    // amplitude, center, sigma, offset
    ModelFn gauss1d = [](double x, const std::vector<double>& q) {
        const double z = (x - q[1]) / q[2];
        return q[0] * std::exp(-0.5 * z * z) + q[3];
    };

    PsfFit out;
    {
        FitData d;  // horizontal cut through the peak row
        double lo = peak, hi = 0.0;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            d.x.push_back(map.x_um[ix]);
            const double v = map.at(ix, py);
            d.y.push_back(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        d.sigma.assign(nx, std::max(hi - lo, 1e-12) * 1e-3);
        const double span = map.x_um.back() - map.x_um.front();
        std::vector<double> init = {hi - lo, map.x_um[px], std::max(span / 10.0, 1e-3), lo};
        out.horizontal = least_squares_fit(d, gauss1d, init);
        out.horizontal.names = {"amplitude", "center_um", "sigma_um", "offset"};
        out.horizontal.params[2] = std::abs(out.horizontal.params[2]);
    }
    {
        FitData d;  // vertical cut through the peak column
        double lo = peak, hi = 0.0;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            d.x.push_back(map.y_um[iy]);
            const double v = map.at(px, iy);
            d.y.push_back(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        d.sigma.assign(ny, std::max(hi - lo, 1e-12) * 1e-3);
        const double span = map.y_um.back() - map.y_um.front();
        std::vector<double> init = {hi - lo, map.y_um[py], std::max(span / 10.0, 1e-3), lo};
        out.vertical = least_squares_fit(d, gauss1d, init);
        out.vertical.names = {"amplitude", "center_um", "sigma_um", "offset"};
        out.vertical.params[2] = std::abs(out.vertical.params[2]);
    }

    const double fh = kFwhmPerSigma * out.horizontal.params[2];
    const double fv = kFwhmPerSigma * out.vertical.params[2];
    out.fwhm_um = 0.5 * (fh + fv);
    const double sh = kFwhmPerSigma * out.horizontal.sigmas[2];
    const double sv = kFwhmPerSigma * out.vertical.sigmas[2];
    out.fwhm_sigma_um = 0.5 * std::sqrt(sh * sh + sv * sv);
    out.peak_x_um = out.horizontal.params[1];
    out.peak_y_um = out.vertical.params[1];
    return out;
}

double diffraction_limit_fwhm(double wavelength, double numerical_aperture) {
    if (!(wavelength > 0.0) || !(numerical_aperture > 0.0))
        throw std::invalid_argument("diffraction_limit_fwhm: need positive wavelength and NA");
    return 0.51 * wavelength / numerical_aperture;
}

}  // namespace qdp

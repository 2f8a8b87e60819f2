#pragma once
// Weighted least squares (Levenberg-Marquardt style damped Gauss-Newton with
// numerical Jacobians) and the concrete fits built on it: lifetime histograms
// (both arms), fine-structure splitting vs waveplate angle, Rabi power curves,
// and Gaussian point-spread functions on focal-plane maps.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qdpair/cascade_model.hpp"
#include "qdpair/correlator.hpp"

namespace qdp {

using ModelFn = std::function<double(double x, const std::vector<double>& params)>;

struct FitData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;  // empty = Poisson default sqrt(max(y, 1))
};

struct FitResult {
    std::vector<double> params;
    std::vector<double> sigmas;      // sqrt of covariance diagonal
    double chi2 = 0.0;
    double chi2_reduced = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> names;  // parameter names, model-specific
};

struct FitOptions {
    int max_iterations = 500;
    double lambda_init = 1e-3;       // damping; x10 on reject, /10 on accept
    double rel_chi2_tol = 1e-10;
    double grad_tol = 1e-12;
};

// Core fitter.  Throws std::invalid_argument on empty/mismatched data and
// std::runtime_error (with the condition estimate in the message) when the
// normal equations go singular; an exhausted iteration budget just reports
// converged = false.
FitResult least_squares_fit(const FitData& data, const ModelFn& model,
                            std::vector<double> initial_params,
                            const FitOptions& opts = {});

enum class LifetimeKind { XX, X };

// Fit a sync-folded decay histogram.  Parameters: lifetime_ps, amplitude,
// t0_ps, background; the jitter FWHM is held at the configured value unless
// fit_jitter promotes it to a fifth parameter.
FitResult fit_lifetime(const Histogram& h, LifetimeKind kind, const CascadeParams& p,
                       double fit_lo_ps, double fit_hi_ps, bool fit_jitter = false);

struct FssScanRow {
    double angle_deg;
    double e_x_uev;
    double e_xx_uev;
};

// Joint fit of the X and XX energy-shift branches: shared splitting amplitude
// with opposite signs, shared phase, independent offsets.  Parameters:
// fss_uev, phase_rad, offset_x_uev, offset_xx_uev.
FitResult fit_fss(const std::vector<FssScanRow>& rows, double noise_sigma_uev = 0.0);

struct RabiRow {
    double power_uw;
    double rate_hz;
};

// Fit rate = max_rate sin^2(pi/2 sqrt(P/P_pi)).  Parameters: pi_power_uw,
// max_rate_hz.  Requires >= 5 points; flags (does not throw) when the scan
// never reaches the fitted pi power, where the curve shape is unconstrained.
struct RabiFit {
    FitResult fit;
    bool scan_covers_pi_power = true;
    double pulse_energy_j_at_pi = 0.0;  // P_pi / rep_rate
};
RabiFit fit_rabi(const std::vector<RabiRow>& rows, double rep_rate_hz);

struct FocalMap {
    std::vector<double> x_um;  // strictly increasing
    std::vector<double> y_um;
    std::vector<double> value;  // row-major [iy * nx + ix]

    double at(std::size_t ix, std::size_t iy) const { return value[iy * x_um.size() + ix]; }
};

// Fit 1-D Gaussians (amplitude, center, sigma, offset) through the brightest
// pixel along both axes and report the averaged FWHM.  Throws if the peak sits
// on the map boundary.
struct PsfFit {
    FitResult horizontal;
    FitResult vertical;
    double fwhm_um = 0.0;        // mean of both cuts
    double fwhm_sigma_um = 0.0;  // propagated from the two cut fits
    double peak_x_um = 0.0;
    double peak_y_um = 0.0;
};
PsfFit fit_psf(const FocalMap& map);

// Diffraction-limited PSF FWHM estimate 0.51 lambda / NA, in the same unit
// as lambda.
double diffraction_limit_fwhm(double wavelength, double numerical_aperture);

}  // namespace qdp

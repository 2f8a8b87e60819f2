#pragma once
// Analytic models of the biexciton-exciton cascade: polarization-resolved
// coincidence densities with fine-structure precession, their detector-jitter
// convolutions, the lifetime histogram shapes, and the small scalar models
// (fine-structure vs waveplate angle, Rabi power dependence).

#include <vector>

#include "qdpair/poincare.hpp"
#include "qdpair/twoqubit.hpp"

namespace qdp {

struct CascadeParams {
    double t1_x_ps = 320.0;            // exciton lifetime
    double t1_xx_ps = 222.7;           // biexciton lifetime
    double fss_uev = 5.79;             // fine-structure splitting, >= 0
    double jitter_1p_fwhm_ps = 89.0;   // one-photon detector timing FWHM

    void validate() const;  // throws on non-positive times or negative fss

    double precession_period_ps() const { return qdp::precession_period_ps(fss_uev); }
    // Two-photon (start-stop) jitter is the one-photon figure times sqrt2.
    double jitter_2p_fwhm_ps() const;
    double sigma_1p_ps() const;
    double sigma_2p_ps() const;
};

// Ideal coincidence density at emission-time difference delta_tau >= 0 for
// analyzer states I (first photon) and J (second):
//   exp(-dt/T1x)/(2 T1x) * |cos(dThe/2) cos(Phi') + i cos(sThe/2) sin(Phi')|^2
// with Phi' = (phi_I + phi_J)/2 + pi dt fss / h.  Equals the Born probability
// |<I,J|psi(dt)>|^2 times the exciton decay density exp(-dt/T1x)/T1x.
double theory_coincidence(const PoincareCoord& i, const PoincareCoord& j,
                          double delta_tau_ps, const CascadeParams& p);
double theory_coincidence(Pol i, Pol j, double delta_tau_ps, const CascadeParams& p);

// The same density convolved with the two-photon Gaussian jitter, valid for
// any real delay (closed form via the exponentially-modified Gaussian with a
// complex rate; reduces to theory_coincidence when the jitter is zero).
double model_coincidence(const PoincareCoord& i, const PoincareCoord& j,
                         double delta_tau_ps, const CascadeParams& p);
double model_coincidence(Pol i, Pol j, double delta_tau_ps, const CascadeParams& p);

// Model curve on an arbitrary delay grid.  eval_model_grid runs the grid in
// parallel (OpenMP); the _serial variant is the reference implementation.
std::vector<double> eval_model_grid(const PoincareCoord& i, const PoincareCoord& j,
                                    const std::vector<double>& delays_ps,
                                    const CascadeParams& p);
std::vector<double> eval_model_grid_serial(const PoincareCoord& i, const PoincareCoord& j,
                                           const std::vector<double>& delays_ps,
                                           const CascadeParams& p);

// Unit-area lifetime histogram shapes vs delay after the sync (ps).
// Biexciton arm: exponential decay convolved with the one-photon jitter.
double lifetime_curve_xx(double tau_ps, const CascadeParams& p);
// Exciton arm feeds from the biexciton decay, so its shape is the two-sided
// cascade convolution exp(-t/Txx) * exp(-t/Tx) * jitter (rises from zero).
double lifetime_curve_x(double tau_ps, const CascadeParams& p);

// Emission-energy shift vs half-waveplate angle: a sin(4 theta) oscillation.
// X and XX branches carry opposite signs of the same amplitude, so their
// difference oscillates with peak-to-peak 2*amplitude.
double fss_energy_shift(double angle_deg, double amplitude_uev, double phase_rad,
                        double offset_uev);

// Two-photon resonant excitation Rabi curve: rate(P) = max_rate *
// sin^2(pi/2 sqrt(P/P_pi)); P in the same unit as P_pi, both > 0 (P >= 0).
double rabi_rate(double power, double pi_power, double max_rate);

// Apparent coherence |corner|/populations of the reconstructed two-photon
// state for coincidences binned in measured delay [lo, hi): the negativity
// 2n the jitter-convolved maximally entangled model predicts for that bin.
double negativity_model(double lo_ps, double hi_ps, const CascadeParams& p);

// Same with each photon's projection outcome replaced by a fair coin with
// probability 1 - accuracy: the corner coherence scales by accuracy^2 and a
// white-noise floor appears, 2n = max(0, a^2 kappa - (1 - a^2)/2).
double negativity_model_depolarized(double lo_ps, double hi_ps, const CascadeParams& p,
                                    double projection_accuracy);

}  // namespace qdp

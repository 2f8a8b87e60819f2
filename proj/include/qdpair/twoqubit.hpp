#pragma once
// Two-photon polarization states of the biexciton-exciton cascade and the
// entanglement measures used on them.  Basis order is HH, HV, VH, VV with the
// first slot the first-emitted (biexciton) photon.

#include "qdpair/linalg.hpp"
#include "qdpair/poincare.hpp"

namespace qdp {

// Planck constant in ueV * ps; converts a fine-structure splitting to the
// exciton spin precession rate omega = 2*pi*fss/h.
constexpr double kPlanckUevPs = 4135.667696;

// Ideal cascade state at emission-time difference delta_tau (ps):
//   (|HH> + e^{-i 2 pi delta_tau fss / h} |VV>) / sqrt2.
// fss in ueV, must be >= 0 (delta_tau >= 0 per caller contract).
Vec4 cascade_ket(double delta_tau_ps, double fss_uev);

// Precession period h/fss in ps (+inf when fss = 0).
double precession_period_ps(double fss_uev);

struct DensityMatrix {
    Mat4 rho;

    // Validates hermiticity and unit trace to 1e-10 and eigenvalues >= -1e-9.
    static DensityMatrix from_matrix(const Mat4& m);
    // |psi><psi| for a normalized ket (throws if the norm is off by > 1e-9).
    static DensityMatrix from_ket(const Vec4& psi);
};

// Partial transpose over the second (exciton-photon) subsystem.
Mat4 partial_transpose(const Mat4& rho);

// Ascending eigenvalues + eigenvectors of a Hermitian 4x4 (Jacobi; see linalg).
using qdp::EigenSystem4;
EigenSystem4 eigenvalues_hermitian4(const Mat4& h);

// Entanglement negativity, reported as 2n = 2 * sum |negative eigenvalues|
// of the partial transpose: 1 for Bell states, 0 for separable ones.
double negativity2n(const DensityMatrix& rho);

// <psi|rho|psi> for a normalized reference ket.
double fidelity_to_pure(const DensityMatrix& rho, const Vec4& psi);

}  // namespace qdp

#include "qdpair/twoqubit.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qdp {

Vec4 cascade_ket(double delta_tau_ps, double fss_uev) {
    if (fss_uev < 0.0) throw std::invalid_argument("cascade_ket: fss must be >= 0");
    const double phase = 2.0 * std::numbers::pi * delta_tau_ps * fss_uev / kPlanckUevPs;
    const double r = 1.0 / std::sqrt(2.0);
    return {cplx(r, 0.0), 0.0, 0.0, std::polar(r, -phase)};
}

double precession_period_ps(double fss_uev) {
    if (fss_uev < 0.0) throw std::invalid_argument("precession_period_ps: fss must be >= 0");
    if (fss_uev == 0.0) return std::numeric_limits<double>::infinity();
    return kPlanckUevPs / fss_uev;
}

DensityMatrix DensityMatrix::from_matrix(const Mat4& m) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > 1e-10)
                throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(trace(m) - cplx(1.0, 0.0)) > 1e-10)
        throw std::invalid_argument("DensityMatrix: trace != 1");
    const auto es = eigen_hermitian(m);
    if (es.values[0] < -1e-9)
        throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    return DensityMatrix{m};
}

DensityMatrix DensityMatrix::from_ket(const Vec4& psi) {
    if (std::abs(norm2(psi) - 1.0) > 1e-9)
        throw std::invalid_argument("DensityMatrix::from_ket: ket not normalized");
    return DensityMatrix{outer(psi)};
}

Mat4 partial_transpose(const Mat4& rho) {
    // Transpose the second index pair: (i a)(j b) -> (i b)(j a).
    Mat4 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    r(2 * i + a, 2 * j + b) = rho(2 * i + b, 2 * j + a);
    return r;
}

EigenSystem4 eigenvalues_hermitian4(const Mat4& h) { return eigen_hermitian(h); }

double negativity2n(const DensityMatrix& rho) {
    const auto es = eigen_hermitian(partial_transpose(rho.rho));
    double neg = 0.0;
    for (double v : es.values)
        if (v < 0.0) neg -= v;
    return 2.0 * neg;
}

double fidelity_to_pure(const DensityMatrix& rho, const Vec4& psi) {
    return inner(psi, mul(rho.rho, psi)).real();
}

}  // namespace qdp

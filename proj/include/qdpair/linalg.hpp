#pragma once
// Small dense complex linear algebra for two-qubit work: 2- and 4-vectors,
// 4x4 matrices, Kronecker products, and a self-contained Hermitian
// eigensolver (cyclic Jacobi on the real-symmetric 8x8 embedding).
// Deliberately no external matrix library -- everything here is 4x4.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qdp {

using cplx = std::complex<double>;
using Vec2 = std::array<cplx, 2>;
using Vec4 = std::array<cplx, 4>;

// Row-major 4x4 complex matrix.
struct Mat4 {
    std::array<cplx, 16> a{};

    cplx& operator()(int i, int j) { return a[4 * i + j]; }
    const cplx& operator()(int i, int j) const { return a[4 * i + j]; }

    static Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Mat4 operator+(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (int i = 0; i < 16; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}

inline Mat4 operator-(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (int i = 0; i < 16; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

inline Mat4 operator*(cplx s, const Mat4& m) {
    Mat4 r;
    for (int i = 0; i < 16; ++i) r.a[i] = s * m.a[i];
    return r;
}

inline Mat4 mul(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const cplx xik = x(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < 4; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

inline Mat4 dagger(const Mat4& m) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = std::conj(m(j, i));
    return r;
}

inline cplx trace(const Mat4& m) { return m(0, 0) + m(1, 1) + m(2, 2) + m(3, 3); }

inline Vec4 mul(const Mat4& m, const Vec4& v) {
    Vec4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i] += m(i, j) * v[j];
    return r;
}

// <x|y> with the physics convention (conjugate on the left argument).
inline cplx inner(const Vec4& x, const Vec4& y) {
    cplx s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::conj(x[i]) * y[i];
    return s;
}

inline double norm2(const Vec4& v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return s;
}

// Tensor product of single-photon amplitudes; first factor is the slower index,
// so (a (x) b)[2*i + j] = a[i] * b[j] and the basis order is HH, HV, VH, VV.
inline Vec4 kron(const Vec2& x, const Vec2& y) {
    return {x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]};
}

// |v><v|
inline Mat4 outer(const Vec4& v) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = v[i] * std::conj(v[j]);
    return r;
}

struct EigenSystem4 {
    std::array<double, 4> values{};  // ascending
    std::array<Vec4, 4> vectors{};   // vectors[k] belongs to values[k]
};

// Hermitian 4x4 eigensolver. H = A + iB maps to the real symmetric 8x8
// [[A, -B], [B, A]] whose spectrum is that of H with every eigenvalue doubled;
// cyclic Jacobi sweeps until the off-diagonal Frobenius norm drops below 1e-12
// (50-sweep cap), then the doubled spectrum is collapsed by taking every other
// sorted eigenvalue. Each returned pair is self-validated via ||Hv - lambda v||.
EigenSystem4 eigen_hermitian(const Mat4& h);

// Cholesky-like factor T (lower triangular) with T^dagger T = m, for PSD m.
// Built from the ordinary Cholesky of the index-reversed matrix.
Mat4 lower_factor(const Mat4& m);

}  // namespace qdp

#include "qdpair/linalg.hpp"

#include <algorithm>
#include <cstdio>

namespace qdp {

namespace {

double offdiag_norm(const double m[8][8]) {
    double s = 0.0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            if (i != j) s += m[i][j] * m[i][j];
    return std::sqrt(s);
}

}  // namespace

EigenSystem4 eigen_hermitian(const Mat4& h) {
    // Real-symmetric embedding: M = [[A, -B], [B, A]] for H = A + iB.
    double m[8][8], v[8][8];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double re = 0.5 * (h(i, j).real() + h(j, i).real());
            const double im = 0.5 * (h(i, j).imag() - h(j, i).imag());
            m[i][j] = re;
            m[i + 4][j + 4] = re;
            m[i][j + 4] = -im;
            m[i + 4][j] = im;
        }
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) v[i][j] = (i == j) ? 1.0 : 0.0;

    // Cyclic Jacobi: rotate away each off-diagonal element in turn.
    for (int sweep = 0; sweep < 50 && offdiag_norm(m) > 1e-12; ++sweep) {
        for (int p = 0; p < 8; ++p)
            for (int q = p + 1; q < 8; ++q) {
                if (std::abs(m[p][q]) < 1e-300) continue;
                const double theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
                // smaller-root tangent keeps rotations well conditioned
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 8; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < 8; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for (int k = 0; k < 8; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }

    std::array<int, 8> idx{0, 1, 2, 3, 4, 5, 6, 7};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return m[a][a] < m[b][b]; });

    // Every eigenvalue of H shows up twice; take one representative per pair.
    // A column [x; y] of the embedding maps back to the complex vector x + iy.
    EigenSystem4 out;
    for (int k = 0; k < 4; ++k) {
        const int col = idx[2 * k];
        out.values[k] = m[col][col];
        Vec4 vec;
        double n = 0.0;
        for (int i = 0; i < 4; ++i) {
            vec[i] = cplx(v[i][col], v[i + 4][col]);
            n += std::norm(vec[i]);
        }
        n = std::sqrt(n);
        for (auto& c : vec) c /= n;
        out.vectors[k] = vec;
    }

    // Self-check: the solver refuses to hand back pairs that do not satisfy
    // the eigen equation to 1e-9 (residual in the max norm).
    for (int k = 0; k < 4; ++k) {
        const Vec4 hv = mul(h, out.vectors[k]);
        double resid = 0.0;
        for (int i = 0; i < 4; ++i)
            resid = std::max(resid, std::abs(hv[i] - out.values[k] * out.vectors[k][i]));
        if (!(resid < 1e-9)) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "eigen_hermitian: residual %.3e for eigenvalue %d", resid, k);
            throw std::runtime_error(buf);
        }
    }
    return out;
}

Mat4 lower_factor(const Mat4& m) {
    // Want lower-triangular T with T^dagger T = m.  With J the index-reversal
    // permutation, Cholesky of J m J gives L L^dagger; then T = (J L J)^dagger
    // is lower triangular and reproduces m.
    Mat4 r;  // J m J
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = m(3 - i, 3 - j);

    Mat4 l;  // Cholesky with a tiny ridge so rank-deficient inputs pass through
    for (int j = 0; j < 4; ++j) {
        cplx d = r(j, j) + 1e-14;
        for (int k = 0; k < j; ++k) d -= l(j, k) * std::conj(l(j, k));
        const double dj = std::sqrt(std::max(d.real(), 1e-16));
        l(j, j) = dj;
        for (int i = j + 1; i < 4; ++i) {
            cplx s = r(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / dj;
        }
    }

    Mat4 t;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) t(i, j) = std::conj(l(3 - j, 3 - i));
    return t;
}

}  // namespace qdp

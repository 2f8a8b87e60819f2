#include "qdpair/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdp {

namespace {

constexpr double pi = std::numbers::pi;
const double inv_sqrt_pi = 1.0 / std::sqrt(pi);
using cd = std::complex<double>;

// Laplace continued fraction, good once Re z is large:
//   erfcx(z) = (1/sqrt(pi)) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
// evaluated with the modified Lentz scheme.
cd erfcx_cf(cd z) {
    const double tiny = 1e-300;
    cd f = z, c = z, d = 0.0;
    for (int k = 1; k < 80; ++k) {
        const double a = 0.5 * k;
        d = z + a * d;
        if (std::abs(d) < tiny) d = tiny;
        c = z + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const cd delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-17) break;
    }
    return inv_sqrt_pi / f;
}

// Maclaurin series erfcx(z) = sum (-z)^n / Gamma(n/2 + 1); fine for |z| <~ 1.
cd erfcx_series(cd z) {
    static const auto inv_gamma = [] {
        std::array<double, 64> g{};
        g[0] = 1.0;                    // 1/Gamma(1)
        g[1] = 2.0 * inv_sqrt_pi;      // 1/Gamma(3/2)
        for (int n = 2; n < 64; ++n) g[n] = g[n - 2] / (0.5 * n);
        return g;
    }();
    cd sum = 0.0, pw = 1.0;
    for (int n = 0; n < 64; ++n) {
        const cd term = pw * inv_gamma[n];
        sum += term;
        if (n > 4 && std::abs(term) < 1e-18 * std::abs(sum)) break;
        pw *= -z;
    }
    return sum;
}

// Trapezoid discretization of erfcx(z) = (z/pi) int exp(-t^2)/(t^2+z^2) dt
// plus the residue of the pole the sum walks past (Poisson summation gives an
// ~exp(-pi^2/h^2) ~ 7e-18 absolute error floor at h = 0.5, and erfcx never
// drops below ~0.02 on this domain, so the relative error stays ~1e-15).
cd erfcx_trapezoid(cd z, double h) {
    const cd z2 = z * z;
    cd sum = 1.0 / z2;
    const int kmax = static_cast<int>(std::ceil(7.0 / h));
    for (int k = 1; k <= kmax; ++k) {
        const double t2 = k * h * k * h;
        sum += 2.0 * std::exp(-t2) / (t2 + z2);
    }
    cd val = z * h / pi * sum;
    // pole correction: -2 exp(z^2) / (exp(2 pi z / h) - 1), negligible for
    // large Re z because the denominator explodes
    const cd w = 2.0 * pi * z / h;
    if (w.real() < 690.0) val -= 2.0 * std::exp(z2) / (std::exp(w) - 1.0);
    return val;
}

}  // namespace

double erfcx(double x) {
    if (x < 0.0) {
        // erfcx(-x) = 2 exp(x^2) - erfcx(x); overflows for x < -26.6
        const double e = 2.0 * std::exp(std::min(x * x, 709.0));
        return e - erfcx(-x);
    }
    if (x < 6.0) return std::exp(x * x) * std::erfc(x);
    return erfcx_cf(cd(x, 0.0)).real();
}

std::complex<double> erfcx(std::complex<double> z) {
    if (z.real() < 0.0)
        throw std::domain_error("erfcx(complex): requires Re z >= 0");
    if (z.imag() < 0.0) return std::conj(erfcx(std::conj(z)));
    if (z.imag() == 0.0) return cd(erfcx(z.real()), 0.0);
    if (std::abs(z) <= 0.8) return erfcx_series(z);
    if (z.real() >= 8.0) return erfcx_cf(z);
    // Near the imaginary axis the pole-correction denominator can vanish when
    // Im z sits on a multiple of h; a second step size dodges that line.
    double h = 0.5;
    if (z.real() < 0.05) {
        const double frac = std::abs(z.imag() / h - std::round(z.imag() / h));
        if (frac * h < 0.05) h = 0.43;
    }
    return erfcx_trapezoid(z, h);
}

double gauss_pdf(double t, double sigma) {
    const double u = t / sigma;
    return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * pi));
}

std::complex<double> emg(double t, std::complex<double> lambda, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("emg: sigma must be >= 0");
    if (sigma == 0.0)
        return t < 0.0 ? cd(0.0) : std::exp(-lambda * t);
    // Closed form 0.5 exp(lambda^2 sigma^2/2 - lambda t) erfc(zeta) with
    // zeta = (lambda sigma - t/sigma)/sqrt2, rewritten through erfcx so the
    // exponentials cancel instead of overflowing:
    //   Re zeta >= 0:  0.5 exp(-t^2/(2 sigma^2)) erfcx(zeta)
    //   Re zeta <  0:  exp(lambda^2 sigma^2/2 - lambda t)
    //                  - 0.5 exp(-t^2/(2 sigma^2)) erfcx(-zeta)
    const cd zeta = (lambda * sigma - t / sigma) / std::sqrt(2.0);
    const double gauss_exp = std::exp(-0.5 * (t / sigma) * (t / sigma));
    if (zeta.real() >= 0.0) return 0.5 * gauss_exp * erfcx(zeta);
    return std::exp(0.5 * lambda * lambda * sigma * sigma - lambda * t) -
           0.5 * gauss_exp * erfcx(-zeta);
}

double emg(double t, double lambda, double sigma) {
    return emg(t, cd(lambda, 0.0), sigma).real();
}

}  // namespace qdp

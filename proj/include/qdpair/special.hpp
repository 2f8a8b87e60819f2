#pragma once
// Scaled complementary error function erfcx(z) = exp(z^2) erfc(z) on the right
// half plane, and the exponentially-modified-Gaussian kernel
//   emg(t; lambda, sigma) = integral_0^inf exp(-lambda s) gauss(t - s; sigma) ds
// that every jitter-convolved decay model in this package reduces to.
// lambda may be complex (decay rate with a precession frequency in the
// imaginary part); sigma = 0 falls back to the bare causal exponential.

#include <complex>

namespace qdp {

// FWHM of a Gaussian = kFwhmPerSigma * sigma.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

double erfcx(double x);
std::complex<double> erfcx(std::complex<double> z);  // requires Re z >= 0

// Unit-area Gaussian density.
double gauss_pdf(double t, double sigma);

std::complex<double> emg(double t, std::complex<double> lambda, double sigma);
double emg(double t, double lambda, double sigma);

}  // namespace qdp

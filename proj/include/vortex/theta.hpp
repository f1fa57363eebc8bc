#pragma once

// Jacobi theta function of the square lattice (tau = i) and the Gaussian
// weighted modulus that is doubly periodic on C/(Z + iZ).

#include <cmath>
#include <complex>
#include <numbers>

namespace vortex::theta {

/// Smallest truncation M such that the tail over |m| > M is below tail_tol
/// uniformly for Im z in [0, 1]. Throws TruncationError if tail_tol is below
/// the round-off floor of the partial sum.
int terms_for_tolerance(double tail_tol);

/// theta(z) = sum_{|m| <= terms} exp(-pi m^2) exp(2 pi i m z).
template <typename Real>
std::complex<Real> value(std::complex<Real> z, int terms) {
  const Real pi = std::numbers::pi_v<Real>;
  std::complex<Real> sum(0);
  // Pair +m and -m from the smallest terms outward for accuracy.
  for (int m = terms; m >= 1; --m) {
    const Real w = std::exp(-pi * Real(m) * Real(m));
    const std::complex<Real> phase = std::exp(std::complex<Real>(0, 2 * pi * Real(m)) * z);
    const std::complex<Real> phase_neg = std::exp(std::complex<Real>(0, -2 * pi * Real(m)) * z);
    sum += w * (phase + phase_neg);
  }
  return sum + std::complex<Real>(1);
}

/// |theta(x + iy)|^2 exp(-2 pi y^2), periodic under x -> x+1 and y -> y+1.
template <typename Real>
Real weighted_norm2(Real x, Real y, int terms) {
  const Real pi = std::numbers::pi_v<Real>;
  return std::norm(value(std::complex<Real>(x, y), terms)) * std::exp(-2 * pi * y * y);
}

}  // namespace vortex::theta

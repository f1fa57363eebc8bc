#pragma once

// Curvature coefficients of the vortex metric and endpoint positivity checks.

#include "vortex/geometry.hpp"
#include "vortex/vortex_model.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

namespace vortex {

/// a1 = Lf + Lpsi + (r1+1) + s(2r1+1)   c1 = 2r2 + |phi|_g^2 + s(4r2+2)
/// a2 = Lf + r1 + s(2r1+1)              c2 = (2r2+2) - |phi|_g^2 + s(4r2+2)
/// g  = gradient density, with s the shift alpha (1 - t).
struct CurvatureCoeffs {
  ScalarField a1, c1, a2, c2, g;

  /// a1 c1 a2 c2 + g c1 a2
  ScalarField expanded() const;
  /// c1 a2 (a1 c2 + g)
  ScalarField factorized() const;
};

CurvatureCoeffs curvature_coeffs(const MetricState& state, const VortexParams& params, double shift);

struct DetIdentity {
  /// sup |factorized - expanded| / max(1, sup |expanded|)
  double factorization_gap = 0.0;
  /// sup |expanded - a0|
  double residual = 0.0;
};

DetIdentity det_identity_check(const CurvatureCoeffs& coeffs, const RhsData& rhs);

/// Unit direction (cos theta, e^{i delta} sin theta) in T_Sigma x fiber.
struct Direction {
  std::complex<double> z1, z2;
};

/// Determinant and (1,1) entry of the 2x2 Griffiths form at node k.
struct GriffithsForm {
  double h11 = 0.0, h22 = 0.0, off2 = 0.0;
  double det() const noexcept { return h11 * h22 - off2; }
};

GriffithsForm griffiths_form(const CurvatureCoeffs& coeffs, std::size_t node, const Direction& zeta);

struct PositivityFailure {
  std::string subcheck;  ///< "diagonal", "dual_nakano" or "griffiths"
  int i = 0, j = 0;
  Direction zeta{};
  double value = 0.0;
};

struct PositivityReport {
  double min_diagonal = 0.0;     ///< min over a1, c1, a2, c2
  double min_dual_nakano = 0.0;  ///< min over c1, a2, a1 c2 + g
  double min_griffiths_h11 = 0.0;
  double min_griffiths_det = 0.0;
  int n_samples = 0;
  bool diagonal_ok = false;
  bool dual_nakano_ok = false;
  bool griffiths_ok = false;
  std::optional<PositivityFailure> failure;  ///< first failure found

  bool passed() const noexcept { return diagonal_ok && dual_nakano_ok && griffiths_ok; }
};

/// Diagonal, dual-Nakano surrogate and sampled Griffiths checks.
PositivityReport positivity_check(const CurvatureCoeffs& coeffs, int n_samples, std::uint64_t seed = 0);

/// Throws NotPositive describing report.failure when the report did not pass.
void require_positive(const PositivityReport& report);

}  // namespace vortex

#pragma once

// Reduced scalar equations of the two determinant/Hermite-Einstein systems
// on the rank-2 vortex bundle over Sigma x CP^1. The metric is described by
// two functions (f, psi) on Sigma; g = exp(-psi) k is the induced metric on L.

#include "vortex/geometry.hpp"

#include <utility>

namespace vortex {

struct VortexParams {
  int r1 = 1;
  int r2 = 1;
  double alpha = 0.0;
  double epsilon = 1.0;
  double t = 0.0;
  int deg_l = 1;

  /// Throws ConfigError when an invariant fails.
  void validate() const;

  /// alpha (1 - t): the shift of the curvature factors along the path.
  double shift() const noexcept { return alpha * (1.0 - t); }
  /// 2 (2 r1 + 1)(4 r2 + 2)(2 alpha + 1) epsilon, the zeroth-order psi
  /// coefficient of the coupled trace equation.
  double coupled_psi_coefficient() const noexcept;
  VortexParams at(double new_t) const {
    VortexParams p = *this;
    p.t = new_t;
    return p;
  }
};

/// Immutable snapshot of the metric pair with derived fields cached.
class MetricState {
 public:
  MetricState(ScalarField f, ScalarField psi, SectionPtr section);

  const ScalarField& f() const noexcept { return f_; }
  const ScalarField& psi() const noexcept { return psi_; }
  const ScalarField& lap_f() const noexcept { return lap_f_; }
  const ScalarField& lap_psi() const noexcept { return lap_psi_; }
  /// exp(-psi) |phi|_k^2
  const ScalarField& phig2() const noexcept { return phig2_; }
  /// Unchecked gradient density; see grad_term() for the validated version.
  const ScalarField& gradient_density() const noexcept { return grad_; }
  const SectionData& section() const noexcept { return *section_; }
  const SectionPtr& section_ptr() const noexcept { return section_; }
  const GridPtr& grid() const noexcept { return f_.grid_ptr(); }

  MetricState with_f(ScalarField f) const { return MetricState(std::move(f), psi_, section_); }
  MetricState with_psi(ScalarField psi) const { return MetricState(f_, std::move(psi), section_); }

 private:
  ScalarField f_, psi_, lap_f_, lap_psi_, phig2_, grad_;
  SectionPtr section_;
};

/// Frozen right-hand side a0 of the determinant equation.
struct RhsData {
  ScalarField a0;
};

enum class Sys1Equation { psi_eq, f_eq };

ScalarField phi_g2(const ScalarField& psi, const SectionData& section);

/// i grad^{1,0} phi ^ grad^{0,1} phi^dagger / omega, obtained from the
/// curvature identity as Delta|phi|_g^2 + (1 + Delta psi)|phi|_g^2.
/// Throws NegativityError if any node is below -1e-6.
ScalarField grad_term(const MetricState& state);

/// Left side of the determinant equation at params.t:
/// a1 c1 a2 c2 + G c1 a2.
ScalarField determinant_lhs(const MetricState& state, const VortexParams& params);

/// Trace equation of the decoupled system; independent of t.
ScalarField residual_sys1_psi(const MetricState& state, const VortexParams& params);

ScalarField residual_sys1(const MetricState& state, const VortexParams& params, const RhsData& rhs,
                          Sys1Equation which);

/// Trace equation of the coupled system (second component of residual_sys2).
ScalarField residual_sys2_psi(const MetricState& state, const VortexParams& params);

/// (determinant residual, trace residual) of the coupled system.
std::pair<ScalarField, ScalarField> residual_sys2(const MetricState& state, const VortexParams& params,
                                                  const RhsData& rhs);

/// Homotopy for the t = 0 trace equation:
/// L_s(psi) = Delta psi + 1 - s (1 - |phi|_g^2)(2r1+1)/(2r2+1) - 2(2r1+1) eps psi,
/// with eps = params.epsilon (pass 1 for the decoupled system).
ScalarField residual_t0_homotopy(const MetricState& state, const VortexParams& params, double s);

/// a0 = determinant_lhs at t = 0. Throws PositivityError if min(a0) <= 0.
RhsData compute_rhs_t0(const MetricState& state0, const VortexParams& params);

inline constexpr double kDefaultAlphaMax = 64.0;
inline constexpr double kAlphaSafetyFactor = 1.5;

/// True when alpha makes every t = 0 factor and the dual-Nakano surrogate
/// strictly positive at every node.
bool alpha_admissible(const MetricState& state0, const VortexParams& params, double alpha);

/// Smallest admissible alpha on the ladder 0, 0.5, 1, 2, 4, ... times 1.5.
/// Throws CalibrationError when no ladder value up to alpha_max works.
double calibrate_alpha(const MetricState& state0, const VortexParams& params,
                       double alpha_max = kDefaultAlphaMax);

inline constexpr double kDefaultEpsilonMin = 0.5;

/// eps = 2 max(eps_min, (|lap_psi_lower| + 1) / (2(2r1+1)(4r2+2)(2 alpha+1))).
double calibrate_epsilon(double lap_psi_lower, const VortexParams& params,
                         double eps_min = kDefaultEpsilonMin);

}  // namespace vortex

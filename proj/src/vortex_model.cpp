#include "vortex/vortex_model.hpp"

#include "vortex/errors.hpp"
#include "vortex/positivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vortex {

void VortexParams::validate() const {
  if (r1 < 1 || r2 < 1) throw ConfigError("r1 and r2 must be positive integers");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("t must lie in [0, 1]");
  if (deg_l < 1) throw ConfigError("deg_l must be positive");
}

double VortexParams::coupled_psi_coefficient() const noexcept {
  return 2.0 * (2 * r1 + 1) * (4 * r2 + 2) * (2 * alpha + 1) * epsilon;
}

MetricState::MetricState(ScalarField f, ScalarField psi, SectionPtr section)
    : f_(std::move(f)),
      psi_(std::move(psi)),
      lap_f_(laplacian(f_)),
      lap_psi_(laplacian(psi_)),
      phig2_(phi_g2(psi_, *section)),
      grad_(laplacian(phig2_) + (1.0 + lap_psi_) * phig2_),
      section_(std::move(section)) {}

ScalarField phi_g2(const ScalarField& psi, const SectionData& section) {
  return ScalarField(psi.grid_ptr(), (-psi.values()).exp() * section.phik2.values());
}

ScalarField grad_term(const MetricState& state) {
  const ScalarField& g = state.gradient_density();
  const double lo = g.min();
  if (lo < -1e-6)
    throw NegativityError("gradient density reaches " + std::to_string(lo) +
                          "; Laplacian convention or resolution is inconsistent");
  return g;
}

ScalarField determinant_lhs(const MetricState& state, const VortexParams& params) {
  return curvature_coeffs(state, params, params.shift()).expanded();
}

ScalarField residual_sys1_psi(const MetricState& state, const VortexParams& p) {
  const double k1 = 2 * p.r1 + 1;
  const double k2 = 2 * p.r2 + 1;
  return k1 * (state.phig2() - 1.0) + k2 * (state.lap_psi() + 1.0) - k1 * (4 * p.r2 + 2) * state.psi();
}

ScalarField residual_sys1(const MetricState& state, const VortexParams& params, const RhsData& rhs,
                          Sys1Equation which) {
  if (which == Sys1Equation::psi_eq) return residual_sys1_psi(state, params);
  return determinant_lhs(state, params) - rhs.a0;
}

ScalarField residual_sys2_psi(const MetricState& state, const VortexParams& p) {
  const double shift2 = 1.0 + 2.0 * p.shift();
  const ScalarField trace_factor = 2.0 * state.lap_f() + state.lap_psi() + shift2 * (2 * p.r1 + 1);
  return 2.0 * trace_factor * (state.phig2() - 1.0) + (state.lap_psi() + 1.0) * (shift2 * (4 * p.r2 + 2)) -
         p.coupled_psi_coefficient() * state.psi();
}

std::pair<ScalarField, ScalarField> residual_sys2(const MetricState& state, const VortexParams& params,
                                                  const RhsData& rhs) {
  return {determinant_lhs(state, params) - rhs.a0, residual_sys2_psi(state, params)};
}

ScalarField residual_t0_homotopy(const MetricState& state, const VortexParams& p, double s) {
  const double ratio = double(2 * p.r1 + 1) / double(2 * p.r2 + 1);
  return state.lap_psi() + 1.0 - (s * ratio) * (1.0 - state.phig2()) -
         (2.0 * (2 * p.r1 + 1) * p.epsilon) * state.psi();
}

RhsData compute_rhs_t0(const MetricState& state0, const VortexParams& params) {
  ScalarField a0 = determinant_lhs(state0, params.at(0.0));
  const double lo = a0.min();
  if (!(lo > 0.0))
    throw PositivityError("frozen right-hand side has min " + std::to_string(lo) +
                          "; alpha is not large enough");
  return RhsData{std::move(a0)};
}

bool alpha_admissible(const MetricState& state0, const VortexParams& params, double alpha) {
  VortexParams p = params;
  p.alpha = alpha;
  p.t = 0.0;
  const CurvatureCoeffs c = curvature_coeffs(state0, p, p.shift());
  const double dual = (c.a1 * c.c2 + c.g).min();
  return c.a1.min() > 0 && c.c1.min() > 0 && c.a2.min() > 0 && c.c2.min() > 0 && dual > 0;
}

double calibrate_alpha(const MetricState& state0, const VortexParams& params, double alpha_max) {
  for (double rung = 0.0; rung <= alpha_max; rung = rung == 0.0 ? 0.5 : 2.0 * rung) {
    if (alpha_admissible(state0, params, rung)) return kAlphaSafetyFactor * rung;
  }
  throw CalibrationError("no alpha <= " + std::to_string(alpha_max) +
                         " makes the t = 0 curvature factors positive");
}

double calibrate_epsilon(double lap_psi_lower, const VortexParams& p, double eps_min) {
  const double denom = 2.0 * (2 * p.r1 + 1) * (4 * p.r2 + 2) * (2 * p.alpha + 1);
  return 2.0 * std::max(eps_min, (std::abs(lap_psi_lower) + 1.0) / denom);
}

}  // namespace vortex

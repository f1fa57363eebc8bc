#include "vortex/estimates.hpp"

#include "vortex/errors.hpp"
#include "vortex/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vortex {

std::string_view to_string(SystemKind system) { return system == SystemKind::sys1 ? "sys1" : "sys2"; }

bool BoundsReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.enforced || c.pass; });
}

const BoundCheck& BoundsReport::at(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no bound check named " + std::string(name));
}

std::vector<std::string> BoundsReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (c.enforced && !c.pass) out.push_back(c.name);
  return out;
}

const std::vector<std::string>& bound_check_names() {
  static const std::vector<std::string> names = {
      "phi_g2_below_one", "psi_upper", "psi_lower",       "eps_psi_upper",   "branch", "coupled_psi_positive",
      "a0_positive",      "psi_compat", "det_a_positive", "lap_psi_uniform", "lap_f_uniform",
  };
  return names;
}

void PathHistory::record(const MetricState& state) {
  sup_lap_psi.push_back(state.lap_psi().sup_norm());
  sup_lap_f.push_back(state.lap_f().sup_norm());
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + std::ptrdiff_t(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

BoundsReport check_bounds(const MetricState& state, const VortexParams& p, const RhsData& rhs, SystemKind system,
                          const PathHistory* history, double report_tol) {
  const bool sys1 = system == SystemKind::sys1;
  const double k1 = 2 * p.r1 + 1;
  const double kpsi = k1 * (4 * p.r2 + 2);
  BoundsReport report;

  // margin >= 0 means satisfied; `upper` checks measured <= bound.
  auto add = [&](const std::string& name, double measured, double bound, bool upper, bool enforced) {
    const double margin = upper ? bound - measured : measured - bound;
    report.checks.push_back({name, measured, bound, margin, enforced, margin >= -report_tol});
  };

  add("phi_g2_below_one", state.phig2().max(), 1.0, true, true);
  add("psi_upper", state.psi().max(), (2 * p.r2 + 1) / kpsi, true, sys1);
  add("psi_lower", state.psi().min(), -k1 / kpsi, false, sys1);
  add("eps_psi_upper", p.epsilon * state.psi().max(), 1.0 / (2.0 * k1), true, !sys1);

  const double shift = p.shift();
  add("branch", (state.lap_f() + (p.r1 + shift * k1)).min(), 0.0, false, true);
  add("coupled_psi_positive", (state.lap_psi() + 1.0 + p.coupled_psi_coefficient()).min(), 0.0, false, !sys1);
  add("a0_positive", rhs.a0.min(), 0.0, false, true);

  const ScalarField psi_res = sys1 ? residual_sys1_psi(state, p) : residual_sys2_psi(state, p);
  add("psi_compat", std::abs(omega_mean(psi_res)), kPsiCompatTol, true, true);

  add("det_a_positive", ellipticity_check(state, p, 1.0).min(), 0.0, false, !sys1);

  const double sup_lpsi = state.lap_psi().sup_norm();
  const double sup_lf = state.lap_f().sup_norm();
  double bound_lpsi = std::numeric_limits<double>::infinity();
  double bound_lf = std::numeric_limits<double>::infinity();
  if (history && !history->sup_lap_psi.empty()) {
    bound_lpsi = kUniformityFactor * median(history->sup_lap_psi);
    bound_lf = kUniformityFactor * median(history->sup_lap_f);
  }
  add("lap_psi_uniform", sup_lpsi, bound_lpsi, true, true);
  add("lap_f_uniform", sup_lf, bound_lf, true, true);
  return report;
}

}  // namespace vortex

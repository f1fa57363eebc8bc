#pragma once

// Runtime versions of the a-priori bounds, evaluated at every accepted state.

#include "vortex/vortex_model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace vortex {

enum class SystemKind { sys1, sys2 };

std::string_view to_string(SystemKind system);

inline constexpr double kDefaultReportTol = 1e-9;
inline constexpr double kPsiCompatTol = 1e-10;
inline constexpr double kUniformityFactor = 10.0;

struct BoundCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double margin = 0.0;  ///< positive when satisfied
  bool enforced = true;  ///< informational checks never fail a report
  bool pass = true;
};

struct BoundsReport {
  std::vector<BoundCheck> checks;

  bool passed() const;
  const BoundCheck& at(std::string_view name) const;
  /// Names of enforced checks that failed.
  std::vector<std::string> failures() const;
};

/// Fixed order of check names; trace.csv writes one margin column per name.
const std::vector<std::string>& bound_check_names();

/// Running suprema of |Delta psi| and |Delta f| over accepted path states.
struct PathHistory {
  std::vector<double> sup_lap_psi;
  std::vector<double> sup_lap_f;

  void record(const MetricState& state);
};

/// Evaluates every bound at a converged state. With a history the
/// t-uniformity of the Laplacian suprema is checked against 10x the median of
/// the recorded path values.
BoundsReport check_bounds(const MetricState& state, const VortexParams& params, const RhsData& rhs,
                          SystemKind system, const PathHistory* history = nullptr,
                          double report_tol = kDefaultReportTol);

}  // namespace vortex

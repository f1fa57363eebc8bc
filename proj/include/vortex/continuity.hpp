#pragma once

// t = 0 initialization by continuation in s and the continuity paths in t,
// each corrector step a damped Newton iteration.

#include "vortex/estimates.hpp"
#include "vortex/linearization.hpp"
#include "vortex/vortex_model.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

namespace vortex {

enum class Predictor { trivial, secant };

struct SolverConfig {
  double newton_tol = 1e-10;
  int max_newton = 30;
  double dt0 = 0.02;
  double dt_min = 1e-4;
  double dt_max = 0.1;
  double damping = 1.0;
  double compat_tol = kDefaultCompatTol;
  double sigma_min_tol = 1e-8;
  double report_tol = kDefaultReportTol;
  Predictor predictor = Predictor::trivial;

  /// Throws ConfigError when a tolerance is non-positive or dt_min > dt0.
  void validate() const;
};

enum class Normalization { none, mean_zero_f };
enum class LinearSolve { gmres, preconditioner };

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;  ///< sup norms, starting with x0
  /// ||R_{k+1}|| / ||R_k||^2 over the final two iterations (NaN if fewer).
  double kappa = 0.0;
};

struct NewtonResult {
  Eigen::VectorXd x;
  NewtonReport report;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<LinearOperator(const Eigen::VectorXd&)>;

/// Damped Newton iteration to sup-norm residual <= cfg.newton_tol. With
/// mean_zero_f the first f_block entries of every update are projected to
/// mean zero (f_block < 0 means the whole vector).
/// Throws NoConvergence or SingularJacobian.
NewtonResult newton(const ResidualFn& residual, const JacobianFn& jacobian, Eigen::VectorXd x0,
                    Normalization normalization, const SolverConfig& cfg,
                    LinearSolve solve = LinearSolve::gmres, Eigen::Index f_block = -1);

/// Solves the decoupled trace equation for psi by Newton from `initial`.
ScalarField solve_psi_sys1(const ScalarField& initial, const VortexParams& params, const SectionPtr& section,
                           const SolverConfig& cfg);

/// (f0, psi0) = (-psi0/2, psi0) with psi0 obtained by continuation in s from the
/// constant 1/(2(2r1+1)) (divided by eps for sys2), then polished on the
/// system's own trace equation. Throws BoundViolation if |phi|_g^2 >= 1.
MetricState solve_t0(SystemKind system, const VortexParams& params, const SectionPtr& section,
                     const SolverConfig& cfg);

struct PathStep {
  double t = 0.0;
  double dt = 0.0;
  int newton_iterations = 0;
  double kappa = 0.0;
  double residual_f = 0.0;
  double residual_psi = 0.0;
  double psi_min = 0.0, psi_max = 0.0;
  double lap_psi_min = 0.0, lap_psi_max = 0.0;
  double lap_f_min = 0.0, lap_f_max = 0.0;
  double phig2_min = 0.0, phig2_max = 0.0;
  double branch_margin = 0.0;
  double det_a_min = 0.0;
  double a0_min = 0.0;
  double wall_ms = 0.0;
  BoundsReport bounds;
};

struct Snapshot {
  double t;
  MetricState state;
};

struct PathTrace {
  SystemKind system = SystemKind::sys1;
  VortexParams params;
  std::vector<PathStep> steps;
  std::vector<Snapshot> snapshots;
  std::optional<MetricState> final_state;
  PathHistory history;

  double final_t() const { return steps.empty() ? 0.0 : steps.back().t; }
};

struct PathOptions {
  std::vector<double> snapshot_times{0.0, 1.0};
  /// Invoked on every accepted step, including t = 0.
  std::function<void(const PathStep&, const MetricState&)> on_accept;
};

/// Follows the path from t = 0 to t = 1. sys1 holds psi fixed and continues f;
/// sys2 runs coupled Newton on (f, psi). Every accepted step passes
/// check_bounds. Throws PathStuck, or EpsilonTooSmall for sys2 when the
/// Laplacian of psi drops below assumed_lap_psi_lower.
PathTrace continue_path(SystemKind system, const MetricState& state0, const VortexParams& params,
                        const RhsData& rhs, const SolverConfig& cfg, const PathOptions& options = {},
                        std::optional<double> assumed_lap_psi_lower = std::nullopt);

struct RootOracleResult {
  ScalarField u;  ///< branch root for Delta f at every node
  double mean = 0.0;
};

/// Larger root of p u^2 + b u + c = 0 (stable form). Throws NoRealRoot.
double branch_root(double p, double b, double c);

/// At fixed psi the determinant equation is a quadratic in v = Delta f +
/// r1 + shift(2r1+1); returns the root on v > 0 at every node.
RootOracleResult pointwise_root_oracle(const MetricState& state, const VortexParams& params,
                                       const RhsData& rhs);

// --------------------------------------------------------------------------
// Whole-system orchestration: t = 0 solve, calibration, frozen a0, path.

enum class Calibration { automatic, fixed };

struct SystemSetup {
  SystemKind system = SystemKind::sys1;
  VortexParams params;  ///< alpha / epsilon used when fixed
  Calibration alpha_mode = Calibration::automatic;
  Calibration epsilon_mode = Calibration::automatic;
  double alpha_max = kDefaultAlphaMax;
  double epsilon_min = kDefaultEpsilonMin;
  int max_restarts = 8;
};

struct SystemRun {
  VortexParams params;  ///< resolved alpha and epsilon
  MetricState state0;
  RhsData rhs;
  PathTrace trace;
  int restarts = 0;
  double lap_psi_lower = 0.0;  ///< assumed lower bound used for epsilon (sys2)
};

/// Assumed lower bound on the Laplacian of psi before any observation.
inline constexpr double kInitialLapPsiLower = -1.0;

struct PreparedSystem {
  VortexParams params;  ///< resolved alpha and epsilon
  MetricState state0;
  RhsData rhs;
  double lap_psi_lower = kInitialLapPsiLower;
};

/// t = 0 solve, alpha (and for sys2 epsilon) calibration and the frozen a0.
/// Throws CalibrationError if a fixed alpha is not admissible.
PreparedSystem prepare_system(const SystemSetup& setup, const SectionPtr& section, const SolverConfig& cfg,
                              double lap_psi_lower = kInitialLapPsiLower);

/// prepare_system followed by the path. For sys2 with automatic epsilon an
/// EpsilonTooSmall doubles the assumed bound and restarts from t = 0.
SystemRun solve_system(const SystemSetup& setup, const SectionPtr& section, const SolverConfig& cfg,
                       const PathOptions& options = {});

}  // namespace vortex

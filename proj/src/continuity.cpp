#include "vortex/continuity.hpp"

#include "vortex/errors.hpp"
#include "vortex/positivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace vortex {

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(newton_tol, "newton_tol");
  positive(dt0, "dt0");
  positive(dt_min, "dt_min");
  positive(dt_max, "dt_max");
  positive(damping, "damping");
  positive(compat_tol, "compat_tol");
  positive(sigma_min_tol, "sigma_min_tol");
  positive(report_tol, "report_tol");
  if (max_newton < 1) throw ConfigError("max_newton must be at least 1");
  if (dt_min > dt0) throw ConfigError("dt_min must not exceed dt0");
  if (damping > 1.0) throw ConfigError("damping must not exceed 1");
}

namespace {

constexpr double kGmresTol = 1e-12;
constexpr double kGmresStagnation = 1e-6;
constexpr int kMaxDampingHalvings = 12;

double sup(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Eigen::VectorXd stack(const ScalarField& a, const ScalarField& b) {
  const auto n = Eigen::Index(a.values().size());
  Eigen::VectorXd out(2 * n);
  out.head(n) = a.values().matrix();
  out.tail(n) = b.values().matrix();
  return out;
}

ScalarField block(const GridPtr& grid, const Eigen::VectorXd& v, Eigen::Index offset) {
  const auto n = Eigen::Index(grid->size());
  return ScalarField(grid, v.segment(offset, n).array());
}

}  // namespace

NewtonResult newton(const ResidualFn& residual, const JacobianFn& jacobian, Eigen::VectorXd x, Normalization norm,
                    const SolverConfig& cfg, LinearSolve solve, Eigen::Index f_block) {
  NewtonResult out;
  auto& hist = out.report.residual_history;
  Eigen::VectorXd r = residual(x);
  double rnorm = sup(r);
  hist.push_back(rnorm);
  if (!std::isfinite(rnorm)) throw NoConvergence("initial residual is not finite");

  const Eigen::Index fb = f_block < 0 ? x.size() : f_block;
  int it = 0;
  while (rnorm > cfg.newton_tol) {
    if (it == cfg.max_newton)
      throw NoConvergence("residual " + fmt(rnorm) + " after " + std::to_string(it) + " Newton iterations");
    const LinearOperator op = jacobian(x);
    Eigen::VectorXd dx;
    if (solve == LinearSolve::preconditioner) {
      dx = op.precondition(-r);
    } else {
      const GmresResult g = gmres(op, -r, kGmresTol);
      if (!(g.relative_residual <= kGmresStagnation))
        throw SingularJacobian("linear solve stagnated at relative residual " + fmt(g.relative_residual));
      dx = g.x;
    }
    if (norm == Normalization::mean_zero_f) dx.head(fb).array() -= dx.head(fb).mean();

    double lambda = cfg.damping;
    Eigen::VectorXd x_new, r_new;
    double rn_new = std::numeric_limits<double>::infinity();
    for (int h = 0; h <= kMaxDampingHalvings; ++h, lambda *= 0.5) {
      x_new = x + lambda * dx;
      r_new = residual(x_new);
      rn_new = sup(r_new);
      if (std::isfinite(rn_new) && rn_new < rnorm) break;
    }
    if (!(std::isfinite(rn_new) && rn_new < rnorm))
      throw NoConvergence("no damped step reduces the residual below " + fmt(rnorm));
    x = std::move(x_new);
    r = std::move(r_new);
    rnorm = rn_new;
    hist.push_back(rnorm);
    ++it;
  }
  out.report.iterations = it;
  const auto k = hist.size();
  out.report.kappa = k >= 3 && hist[k - 2] > 0 ? hist[k - 1] / (hist[k - 2] * hist[k - 2])
                                               : std::numeric_limits<double>::quiet_NaN();
  out.x = std::move(x);
  return out;
}

ScalarField solve_psi_sys1(const ScalarField& initial, const VortexParams& params, const SectionPtr& section,
                           const SolverConfig& cfg) {
  const GridPtr grid = initial.grid_ptr();
  const ScalarField zero(grid, 0.0);
  auto state_of = [&](const Eigen::VectorXd& x) { return MetricState(zero, ScalarField(grid, x.array()), section); };
  const NewtonResult res = newton(
      [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(residual_sys1_psi(state_of(x), params).values().matrix()); },
      [&](const Eigen::VectorXd& x) { return linearize(state_of(x), params, OperatorTag::sys1_psi); },
      initial.values().matrix(), Normalization::none, cfg);
  return ScalarField(grid, res.x.array());
}

namespace {

LinearOperator scaled(LinearOperator op, double scale) {
  op.apply = [inner = op.apply, scale](const Eigen::VectorXd& v) { return Eigen::VectorXd(scale * inner(v)); };
  op.precondition = [inner = op.precondition, scale](const Eigen::VectorXd& r) {
    return Eigen::VectorXd(inner(r) / scale);
  };
  return op;
}

}  // namespace

MetricState solve_t0(SystemKind system, const VortexParams& params_in, const SectionPtr& section,
                     const SolverConfig& cfg) {
  const GridPtr grid = section->phik2.grid_ptr();
  VortexParams p = params_in.at(0.0);
  if (system == SystemKind::sys1) p.epsilon = 1.0;
  const double k1 = 2 * p.r1 + 1;
  const ScalarField zero(grid, 0.0);
  auto state_of = [&](const Eigen::VectorXd& x) { return MetricState(zero, ScalarField(grid, x.array()), section); };

  // Continuation in s from the constant solution of L_0.
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(Eigen::Index(grid->size()), 1.0 / (2.0 * k1 * p.epsilon));
  double s = 0.0, ds = 0.25;
  while (s < 1.0) {
    const double s_next = std::min(1.0, s + ds);
    try {
      psi = newton(
                [&](const Eigen::VectorXd& x) {
                  return Eigen::VectorXd(residual_t0_homotopy(state_of(x), p, s_next).values().matrix());
                },
                [&](const Eigen::VectorXd& x) { return linearize(state_of(x), p, OperatorTag::s_path, s_next); }, psi,
                Normalization::none, cfg)
                .x;
      s = s_next;
      ds = std::min(0.5, 2.0 * ds);
    } catch (const NoConvergence&) {
      ds *= 0.5;
      if (ds < cfg.dt_min) throw;
    } catch (const SingularJacobian&) {
      ds *= 0.5;
      if (ds < cfg.dt_min) throw;
    }
  }

  // Polish on the system's own trace equation (a constant multiple of L_1).
  ScalarField psi0(grid, psi.array());
  if (system == SystemKind::sys1) {
    psi0 = solve_psi_sys1(psi0, p, section, cfg);
  } else {
    const double scale = (1.0 + 2.0 * p.shift()) * (4 * p.r2 + 2);
    auto coupled_state = [&](const Eigen::VectorXd& x) {
      const ScalarField ps(grid, x.array());
      return MetricState(-0.5 * ps, ps, section);
    };
    psi0 = ScalarField(
        grid, newton(
                  [&](const Eigen::VectorXd& x) {
                    return Eigen::VectorXd(residual_sys2_psi(coupled_state(x), p).values().matrix());
                  },
                  [&](const Eigen::VectorXd& x) {
                    return scaled(linearize(state_of(x), p, OperatorTag::s_path, 1.0), scale);
                  },
                  psi0.values().matrix(), Normalization::none, cfg)
                  .x.array());
  }

  MetricState state(-0.5 * psi0, psi0, section);
  const double top = state.phig2().max();
  if (!(top < 1.0)) throw BoundViolation("|phi|_g^2 reaches " + fmt(top) + " at t = 0");
  return state;
}

double branch_root(double p, double b, double c) {
  if (p == 0.0) {
    if (b == 0.0) throw NoRealRoot("degenerate quadratic with zero linear term");
    return -c / b;
  }
  const double disc = b * b - 4.0 * p * c;
  if (disc < 0.0) throw NoRealRoot("negative discriminant " + fmt(disc));
  const double sq = std::sqrt(disc);
  // Larger root for p > 0 without cancellation.
  if (p > 0.0) return b >= 0.0 ? -2.0 * c / (b + sq) : (-b + sq) / (2.0 * p);
  return b <= 0.0 ? -2.0 * c / (b - sq) : (-b - sq) / (2.0 * p);
}

RootOracleResult pointwise_root_oracle(const MetricState& state, const VortexParams& params, const RhsData& rhs) {
  const CurvatureCoeffs c = curvature_coeffs(state, params, params.shift());
  const double offset = params.r1 + params.shift() * (2 * params.r1 + 1);
  const auto& c1 = c.c1.values();
  const auto& c2 = c.c2.values();
  const auto& lpsi = state.lap_psi().values();
  const auto& g = c.g.values();
  const auto& a0 = rhs.a0.values();
  Eigen::ArrayXd u(c1.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double v = branch_root(c1[k] * c2[k], c1[k] * (c2[k] * (lpsi[k] + 1.0) + g[k]), -a0[k]);
    if (!(v > 0.0)) throw NoRealRoot("no root on the positivity branch at node " + std::to_string(k));
    u[k] = v - offset;
  }
  RootOracleResult out{ScalarField(state.grid(), std::move(u)), 0.0};
  out.mean = omega_mean(out.u);
  return out;
}

namespace {

struct Trial {
  MetricState state;
  NewtonReport report;
};

PathStep describe(double t, double dt, const MetricState& s, const VortexParams& p, const RhsData& rhs,
                  SystemKind system, const NewtonReport& report, BoundsReport bounds) {
  PathStep step;
  step.t = t;
  step.dt = dt;
  step.newton_iterations = report.iterations;
  step.kappa = report.kappa;
  step.residual_f = (determinant_lhs(s, p) - rhs.a0).sup_norm();
  step.residual_psi =
      (system == SystemKind::sys1 ? residual_sys1_psi(s, p) : residual_sys2_psi(s, p)).sup_norm();
  step.psi_min = s.psi().min();
  step.psi_max = s.psi().max();
  step.lap_psi_min = s.lap_psi().min();
  step.lap_psi_max = s.lap_psi().max();
  step.lap_f_min = s.lap_f().min();
  step.lap_f_max = s.lap_f().max();
  step.phig2_min = s.phig2().min();
  step.phig2_max = s.phig2().max();
  step.branch_margin = bounds.at("branch").margin;
  step.det_a_min = bounds.at("det_a_positive").measured;
  step.a0_min = rhs.a0.min();
  step.bounds = std::move(bounds);
  return step;
}

bool hits(double t, const std::vector<double>& times) {
  return std::any_of(times.begin(), times.end(), [t](double s) { return std::abs(s - t) <= 1e-12; });
}

}  // namespace

PathTrace continue_path(SystemKind system, const MetricState& state0, const VortexParams& params,
                        const RhsData& rhs, const SolverConfig& cfg, const PathOptions& options,
                        std::optional<double> assumed_lower) {
  using clock = std::chrono::steady_clock;
  const GridPtr grid = state0.grid();
  const auto n = Eigen::Index(grid->size());
  const SectionPtr& section = state0.section_ptr();

  PathTrace trace;
  trace.system = system;
  trace.params = params;

  auto check_epsilon = [&](const MetricState& s, double t) {
    if (system != SystemKind::sys2 || !assumed_lower) return;
    const double lo = s.lap_psi().min();
    if (lo < *assumed_lower)
      throw EpsilonTooSmall("min Laplacian of psi " + fmt(lo) + " fell below the assumed " + fmt(*assumed_lower) +
                                " at t = " + fmt(t),
                            lo);
  };

  auto accept = [&](double t, double dt, const MetricState& s, const NewtonReport& report, BoundsReport bounds,
                    double ms) {
    PathStep step = describe(t, dt, s, params.at(t), rhs, system, report, std::move(bounds));
    step.wall_ms = ms;
    trace.steps.push_back(std::move(step));
    trace.history.record(s);
    if (hits(t, options.snapshot_times)) trace.snapshots.push_back({t, s});
    if (options.on_accept) options.on_accept(trace.steps.back(), s);
  };

  {
    const auto t0 = clock::now();
    check_epsilon(state0, 0.0);
    BoundsReport b0 = check_bounds(state0, params.at(0.0), rhs, system, &trace.history, cfg.report_tol);
    if (!b0.passed())
      throw BoundViolation("t = 0 state violates " + b0.failures().front());
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    accept(0.0, 0.0, state0, NewtonReport{}, std::move(b0), ms);
  }

  // Unknown vector: f for sys1 (psi frozen), [f; psi] for sys2.
  auto to_vec = [&](const MetricState& s) -> Eigen::VectorXd {
    return system == SystemKind::sys1 ? Eigen::VectorXd(s.f().values().matrix()) : stack(s.f(), s.psi());
  };
  auto to_state = [&](const Eigen::VectorXd& x) {
    if (system == SystemKind::sys1) return state0.with_f(ScalarField(grid, x.array()));
    return MetricState(block(grid, x, 0), block(grid, x, n), section);
  };

  MetricState current = state0;
  Eigen::VectorXd x_prev = to_vec(state0);
  std::optional<Eigen::VectorXd> x_older;
  double dt_prev = 0.0;
  double t = 0.0;
  double dt = std::min(cfg.dt0, cfg.dt_max);
  std::string last_reason;

  while (t < 1.0) {
    double t_next = std::min(1.0, t + dt);
    for (double s : options.snapshot_times)
      if (s > t + 1e-12 && s < t_next - 1e-12) t_next = s;
    if (1.0 - t_next < 1e-12) t_next = 1.0;
    const double step_dt = t_next - t;
    const VortexParams pt = params.at(t_next);
    const auto started = clock::now();

    Eigen::VectorXd guess = x_prev;
    if (cfg.predictor == Predictor::secant && x_older && dt_prev > 0.0)
      guess = x_prev + (step_dt / dt_prev) * (x_prev - *x_older);

    std::optional<Trial> trial;
    try {
      NewtonResult res;
      if (system == SystemKind::sys1) {
        res = newton(
            [&](const Eigen::VectorXd& x) {
              return Eigen::VectorXd((determinant_lhs(to_state(x), pt) - rhs.a0).values().matrix());
            },
            [&](const Eigen::VectorXd& x) { return linearize(to_state(x), pt, OperatorTag::sys1_f); }, guess,
            Normalization::mean_zero_f, cfg, LinearSolve::preconditioner);
      } else {
        res = newton(
            [&](const Eigen::VectorXd& x) {
              const auto [r1, r2] = residual_sys2(to_state(x), pt, rhs);
              return stack(r1, r2);
            },
            [&](const Eigen::VectorXd& x) { return linearize(to_state(x), pt, OperatorTag::sys2_coupled); }, guess,
            Normalization::mean_zero_f, cfg, LinearSolve::gmres, n);
      }
      trial = Trial{to_state(res.x), res.report};
    } catch (const NoConvergence& e) {
      last_reason = std::string("NoConvergence: ") + e.what();
    } catch (const SingularJacobian& e) {
      last_reason = std::string("SingularJacobian: ") + e.what();
    }

    if (trial) {
      check_epsilon(trial->state, t_next);
      BoundsReport bounds = check_bounds(trial->state, pt, rhs, system, &trace.history, cfg.report_tol);
      if (bounds.passed()) {
        const double ms = std::chrono::duration<double, std::milli>(clock::now() - started).count();
        accept(t_next, step_dt, trial->state, trial->report, std::move(bounds), ms);
        x_older = x_prev;
        x_prev = to_vec(trial->state);
        dt_prev = step_dt;
        t = t_next;
        current = trial->state;
        if (trial->report.iterations <= 3) dt = std::min(cfg.dt_max, 2.0 * dt);
        continue;
      }
      const auto failed = bounds.failures();
      last_reason = failed.front() == "branch" ? "BranchLost: branch margin " + fmt(bounds.at("branch").margin)
                                               : "bound violated: " + failed.front();
    }

    dt *= 0.5;
    if (dt < cfg.dt_min) {
      trace.final_state = current;
      throw PathStuck("step fell below dt_min at t = " + fmt(t) + " (" + last_reason + ")", t);
    }
  }
  trace.final_state = current;
  return trace;
}

namespace {

void resolve_alpha(const SystemSetup& setup, const MetricState& state0, VortexParams& p) {
  if (setup.alpha_mode == Calibration::automatic) {
    p.alpha = calibrate_alpha(state0, p, setup.alpha_max);
  } else if (!alpha_admissible(state0, p, p.alpha)) {
    throw CalibrationError("fixed alpha = " + fmt(p.alpha) + " leaves a t = 0 curvature factor non-positive");
  }
}

}  // namespace

PreparedSystem prepare_system(const SystemSetup& setup, const SectionPtr& section, const SolverConfig& cfg,
                              double lap_psi_lower) {
  cfg.validate();
  VortexParams p = setup.params;
  p.t = 0.0;
  p.validate();

  if (setup.system == SystemKind::sys1) {
    p.epsilon = 1.0;
    MetricState state0 = solve_t0(SystemKind::sys1, p, section, cfg);
    resolve_alpha(setup, state0, p);
    RhsData rhs = compute_rhs_t0(state0, p);
    return PreparedSystem{p, std::move(state0), std::move(rhs), lap_psi_lower};
  }

  // psi0 depends on eps, eps on alpha, alpha on psi0; iterate to a fixed point.
  const bool auto_eps = setup.epsilon_mode == Calibration::automatic;
  if (setup.alpha_mode == Calibration::automatic) p.alpha = 0.0;
  if (auto_eps) p.epsilon = calibrate_epsilon(lap_psi_lower, p, setup.epsilon_min);
  for (int sweep = 0;; ++sweep) {
    const double eps_used = p.epsilon;
    MetricState state0 = solve_t0(SystemKind::sys2, p, section, cfg);
    resolve_alpha(setup, state0, p);
    if (auto_eps) p.epsilon = calibrate_epsilon(lap_psi_lower, p, setup.epsilon_min);
    if (p.epsilon == eps_used) {
      RhsData rhs = compute_rhs_t0(state0, p);
      return PreparedSystem{p, std::move(state0), std::move(rhs), lap_psi_lower};
    }
    if (sweep == 15) throw CalibrationError("alpha and epsilon calibration did not settle");
  }
}

SystemRun solve_system(const SystemSetup& setup, const SectionPtr& section, const SolverConfig& cfg,
                       const PathOptions& options) {
  if (setup.system == SystemKind::sys1) {
    PreparedSystem prep = prepare_system(setup, section, cfg);
    PathTrace trace = continue_path(SystemKind::sys1, prep.state0, prep.params, prep.rhs, cfg, options);
    return SystemRun{prep.params, std::move(prep.state0), std::move(prep.rhs), std::move(trace), 0, 0.0};
  }

  const bool auto_eps = setup.epsilon_mode == Calibration::automatic;
  double lower = kInitialLapPsiLower;
  for (int restart = 0;; ++restart) {
    PreparedSystem prep = prepare_system(setup, section, cfg, lower);
    const double lo0 = prep.state0.lap_psi().min();
    try {
      if (auto_eps && lo0 < lower)
        throw EpsilonTooSmall("t = 0 Laplacian of psi " + fmt(lo0) + " is below the assumed " + fmt(lower), lo0);
      std::optional<double> assumed;
      if (auto_eps) assumed = lower;
      PathTrace trace = continue_path(SystemKind::sys2, prep.state0, prep.params, prep.rhs, cfg, options, assumed);
      return SystemRun{prep.params, std::move(prep.state0), std::move(prep.rhs), std::move(trace), restart, lower};
    } catch (const EpsilonTooSmall& e) {
      if (restart >= setup.max_restarts) throw;
      lower = 2.0 * std::min(e.observed_lap_psi_min(), -1e-12);
    }
  }
}

}  // namespace vortex

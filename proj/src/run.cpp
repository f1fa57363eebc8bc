#include "vortex/run.hpp"

#include "vortex/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace vortex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kRootMeanTol = 1e-7;
constexpr double kRootSupTol = 1e-8;
constexpr double kRatioLow = 0.8;
constexpr double kRatioHigh = 1.25;
constexpr double kRefinementTol = 1e-6;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string time_label(double t) { return format_double(t); }

fs::path field_path(const fs::path& dir, std::string_view name, double t) {
  return dir / ("fields_" + std::string(name) + "_t" + time_label(t) + ".csv");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("malformed " + path.string() + ": " + e.what());
  }
}

json failure_record(const std::exception& e) {
  json rec;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    rec["error"] = err->kind();
  } else {
    rec["error"] = "InternalError";
  }
  rec["message"] = e.what();
  if (const auto* stuck = dynamic_cast<const PathStuck*>(&e)) rec["last_good_t"] = stuck->last_good_t();
  if (const auto* eps = dynamic_cast<const EpsilonTooSmall*>(&e))
    rec["observed_lap_psi_min"] = eps->observed_lap_psi_min();
  return rec;
}

class Logger {
 public:
  explicit Logger(const RunOptions& o) : out_(o.quiet ? nullptr : o.log) {}
  void operator()(const std::string& line) const {
    if (out_) *out_ << line << '\n' << std::flush;
  }

 private:
  std::ostream* out_;
};

const std::vector<std::string> kTraceColumns = {
    "t",         "dt",          "newton_iterations", "kappa",       "residual_f", "residual_psi",
    "psi_min",   "psi_max",     "lap_psi_min",       "lap_psi_max", "lap_f_min",  "lap_f_max",
    "phig2_min", "phig2_max",   "branch_margin",     "det_a_min",   "a0_min",
};

std::string trace_header() {
  std::string h;
  for (const auto& c : kTraceColumns) h += (h.empty() ? "" : ",") + c;
  for (const auto& name : bound_check_names()) h += ",margin_" + name;
  return h + "\n";
}

std::string trace_row(const PathStep& s) {
  const double vals[] = {s.t,         s.dt,        double(s.newton_iterations), s.kappa,       s.residual_f,
                         s.residual_psi, s.psi_min, s.psi_max,                 s.lap_psi_min, s.lap_psi_max,
                         s.lap_f_min, s.lap_f_max, s.phig2_min,                s.phig2_max,   s.branch_margin,
                         s.det_a_min, s.a0_min};
  std::string row;
  for (double v : vals) row += (row.empty() ? "" : ",") + format_double(v);
  for (const auto& name : bound_check_names()) row += "," + format_double(s.bounds.at(name).margin);
  return row + "\n";
}

void write_trace(const fs::path& dir, const std::vector<PathStep>& steps) {
  std::string trace = trace_header();
  std::string timings = "t,wall_ms\n";
  for (const auto& s : steps) {
    trace += trace_row(s);
    timings += format_double(s.t) + "," + format_double(s.wall_ms) + "\n";
  }
  write_text(dir / "trace.csv", trace);
  write_text(dir / "timings.csv", timings);
}

SystemSetup make_setup(const RunConfig& c, SystemKind system) {
  SystemSetup s;
  s.system = system;
  s.params.r1 = c.r1;
  s.params.r2 = c.r2;
  s.params.deg_l = c.deg_l;
  s.params.alpha = c.alpha.value_or(0.0);
  s.params.epsilon = c.epsilon.value_or(1.0);
  s.alpha_mode = c.alpha ? Calibration::fixed : Calibration::automatic;
  s.epsilon_mode = c.epsilon ? Calibration::fixed : Calibration::automatic;
  s.alpha_max = c.alpha_max;
  s.epsilon_min = c.epsilon_min;
  s.max_restarts = c.max_restarts;
  return s;
}

json state_extrema(const MetricState& s) {
  return {
      {"f_min", s.f().min()},           {"f_max", s.f().max()},
      {"psi_min", s.psi().min()},       {"psi_max", s.psi().max()},
      {"lap_f_min", s.lap_f().min()},   {"lap_f_max", s.lap_f().max()},
      {"lap_psi_min", s.lap_psi().min()}, {"lap_psi_max", s.lap_psi().max()},
      {"phig2_min", s.phig2().min()},   {"phig2_max", s.phig2().max()},
  };
}

json calibration_json(SystemKind system, const VortexParams& p, const SystemSetup& setup, int restarts,
                      double lower) {
  json j;
  j["alpha"] = p.alpha;
  j["alpha_calibrated"] = setup.alpha_mode == Calibration::automatic;
  if (system == SystemKind::sys2) {
    j["epsilon"] = p.epsilon;
    j["epsilon_calibrated"] = setup.epsilon_mode == Calibration::automatic;
    j["restarts"] = restarts;
    j["lap_psi_lower_assumed"] = lower;
  } else {
    j["epsilon"] = nullptr;
  }
  return j;
}

json t0_json(SystemKind system, const PreparedSystem& prep) {
  json j = state_extrema(prep.state0);
  const auto& p = prep.params;
  j["a0_min"] = prep.rhs.a0.min();
  j["eps_psi_sup"] = (system == SystemKind::sys2 ? p.epsilon : 1.0) * prep.state0.psi().sup_norm();
  j["residual_psi"] = (system == SystemKind::sys1 ? residual_sys1_psi(prep.state0, p)
                                                  : residual_sys2_psi(prep.state0, p))
                          .sup_norm();
  return j;
}

struct EndpointChecks {
  json j;
  bool ok = true;
};

EndpointChecks endpoint_checks(SystemKind system, const MetricState& s, const VortexParams& p0, const RhsData& rhs,
                               const RunConfig& c, const BoundsReport& bounds) {
  EndpointChecks out;
  const VortexParams p = p0.at(1.0);
  json& j = out.j;
  j["endpoint"] = state_extrema(s);
  j["endpoint"]["t"] = 1.0;
  j["endpoint"]["residual_f"] = (determinant_lhs(s, p) - rhs.a0).sup_norm();
  j["endpoint"]["residual_psi"] =
      (system == SystemKind::sys1 ? residual_sys1_psi(s, p) : residual_sys2_psi(s, p)).sup_norm();
  j["endpoint"]["bounds"] = to_json(bounds);
  out.ok = out.ok && bounds.passed();

  const CurvatureCoeffs coeffs = curvature_coeffs(s, p, p.shift());
  const DetIdentity id = det_identity_check(coeffs, rhs);
  j["endpoint"]["factorization_gap"] = id.factorization_gap;

  try {
    const RootOracleResult root = pointwise_root_oracle(s, p, rhs);
    const double sup_diff = sup_distance(root.u, s.lap_f());
    j["root_oracle"] = {{"mean", root.mean},
                        {"sup_diff", sup_diff},
                        {"mean_ok", std::abs(root.mean) <= kRootMeanTol},
                        {"sup_ok", sup_diff <= kRootSupTol}};
  } catch (const NoRealRoot& e) {
    j["root_oracle"] = {{"error", "NoRealRoot"}, {"message", e.what()}};
  }

  const PositivityReport pos = positivity_check(coeffs, c.n_samples, c.seed);
  j["positivity"] = to_json(pos);
  if (!pos.passed()) {
    out.ok = false;
    try {
      require_positive(pos);
    } catch (const NotPositive& e) {
      j["failure"] = failure_record(e);
    }
  }
  return out;
}

/// One system into `dir`. Returns the summary; summary["exit_code"] decides.
json run_system(const RunConfig& c, SystemKind system, const fs::path& dir, const RunOptions& opts) {
  const Logger log(opts);
  fs::create_directories(dir);
  write_text(dir / "config.txt", to_text(c));

  json summary;
  summary["schema_version"] = kSummarySchemaVersion;
  summary["mode"] = opts.mode == RunMode::init ? "init" : "solve";
  summary["system"] = std::string(to_string(system));
  summary["config"] = to_json(c);
  summary["failure"] = nullptr;

  const SystemSetup setup = make_setup(c, system);
  std::vector<PathStep> steps;
  const auto started = std::chrono::steady_clock::now();
  bool ok = false;

  try {
    const GridPtr grid = TorusGrid::create(c.n, c.deg_l);
    const SectionPtr section = make_section(c, grid);
    log(std::string(to_string(system)) + ": solving t = 0 on n = " + std::to_string(c.n));

    if (opts.mode == RunMode::init) {
      const PreparedSystem prep = prepare_system(setup, section, c.solver);
      summary["calibration"] = calibration_json(system, prep.params, setup, 0, prep.lap_psi_lower);
      summary["t0"] = t0_json(system, prep);
      BoundsReport b0 = check_bounds(prep.state0, prep.params, prep.rhs, system, nullptr, c.solver.report_tol);
      summary["t0"]["bounds"] = to_json(b0);
      write_field_csv(field_path(dir, "f", 0.0), prep.state0.f());
      write_field_csv(field_path(dir, "psi", 0.0), prep.state0.psi());
      ok = b0.passed();
      if (!ok) summary["failure"] = {{"error", "BoundViolation"}, {"message", "t = 0 violates " + b0.failures().front()}};
    } else {
      PathOptions popts;
      popts.snapshot_times = c.snapshot_times;
      popts.on_accept = [&](const PathStep& step, const MetricState& s) {
        steps.push_back(step);
        if (std::any_of(c.snapshot_times.begin(), c.snapshot_times.end(),
                        [&](double t) { return std::abs(t - step.t) <= 1e-12; })) {
          write_field_csv(field_path(dir, "f", step.t), s.f());
          write_field_csv(field_path(dir, "psi", step.t), s.psi());
        }
      };
      const SystemRun res = solve_system(setup, section, c.solver, popts);
      // Restarts replay t = 0; keep only the final attempt's rows.
      const auto last_start = std::find_if(steps.rbegin(), steps.rend(), [](const PathStep& s) { return s.t == 0.0; });
      steps.erase(steps.begin(), std::prev(last_start.base()));

      PreparedSystem prep{res.params, res.state0, res.rhs, res.lap_psi_lower};
      summary["calibration"] = calibration_json(system, res.params, setup, res.restarts, res.lap_psi_lower);
      summary["t0"] = t0_json(system, prep);

      const auto& tr = res.trace;
      double min_branch = std::numeric_limits<double>::infinity(), min_det = min_branch, min_coupled = min_branch;
      int max_it = 0;
      for (const auto& s : tr.steps) {
        min_branch = std::min(min_branch, s.branch_margin);
        min_det = std::min(min_det, s.det_a_min);
        min_coupled = std::min(min_coupled, s.bounds.at("coupled_psi_positive").margin);
        max_it = std::max(max_it, s.newton_iterations);
      }
      summary["path"] = {
          {"reached_t", tr.final_t()},
          {"accepted_steps", tr.steps.size()},
          {"sup_lap_psi", *std::max_element(tr.history.sup_lap_psi.begin(), tr.history.sup_lap_psi.end())},
          {"sup_lap_f", *std::max_element(tr.history.sup_lap_f.begin(), tr.history.sup_lap_f.end())},
          {"min_branch_margin", min_branch},
          {"min_det_a", min_det},
          {"min_coupled_psi_margin", min_coupled},
          {"max_newton_iterations", max_it},
      };
      log(std::string(to_string(system)) + ": reached t = " + format_double(tr.final_t()) + " in " +
          std::to_string(tr.steps.size() - 1) + " steps");

      const EndpointChecks end = endpoint_checks(system, *tr.final_state, res.params, res.rhs, c, tr.steps.back().bounds);
      summary.update(end.j);
      ok = end.ok;
    }
  } catch (const Error& e) {
    summary["failure"] = failure_record(e);
    log(std::string(to_string(system)) + ": " + e.kind() + ": " + e.what());
  }

  if (opts.mode == RunMode::solve) write_trace(dir, steps);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  write_text(dir / "wall_time.txt", format_double(ms) + "\n");

  summary["status"] = ok ? "ok" : "failed";
  summary["exit_code"] = ok ? kExitOk : kExitFailed;
  write_json(dir / "summary.json", summary);
  return summary;
}

}  // namespace

SectionPtr make_section(const RunConfig& c, const GridPtr& grid) {
  if (c.section == SectionKind::theta) return std::make_shared<const SectionData>(build_theta_section(grid));
  return std::make_shared<const SectionData>(zero_section(grid));
}

json to_json(const RunConfig& c) {
  json j;
  j["system"] = std::string(to_string(c.system));
  j["n"] = c.n;
  j["r1"] = c.r1;
  j["r2"] = c.r2;
  j["deg_l"] = c.deg_l;
  j["section"] = std::string(to_string(c.section));
  j["alpha"] = c.alpha ? json(*c.alpha) : json("auto");
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json("auto");
  j["alpha_max"] = c.alpha_max;
  j["epsilon_min"] = c.epsilon_min;
  j["max_restarts"] = c.max_restarts;
  j["seed"] = c.seed;
  j["n_samples"] = c.n_samples;
  j["snapshots"] = c.snapshot_times;
  j["solver"] = {
      {"newton_tol", c.solver.newton_tol}, {"max_newton", c.solver.max_newton},
      {"dt0", c.solver.dt0},               {"dt_min", c.solver.dt_min},
      {"dt_max", c.solver.dt_max},         {"damping", c.solver.damping},
      {"compat_tol", c.solver.compat_tol}, {"sigma_min_tol", c.solver.sigma_min_tol},
      {"report_tol", c.solver.report_tol}, {"predictor", std::string(to_string(c.solver.predictor))},
  };
  return j;
}

json to_json(const PositivityReport& r) {
  json j = {
      {"passed", r.passed()},
      {"diagonal_ok", r.diagonal_ok},
      {"dual_nakano_ok", r.dual_nakano_ok},
      {"griffiths_ok", r.griffiths_ok},
      {"min_diagonal", number(r.min_diagonal)},
      {"min_dual_nakano", number(r.min_dual_nakano)},
      {"min_griffiths_h11", number(r.min_griffiths_h11)},
      {"min_griffiths_det", number(r.min_griffiths_det)},
      {"n_samples", r.n_samples},
  };
  if (r.failure) {
    const auto& f = *r.failure;
    j["first_failure"] = {{"subcheck", f.subcheck},
                          {"i", f.i},
                          {"j", f.j},
                          {"value", f.value},
                          {"zeta", {f.zeta.z1.real(), f.zeta.z1.imag(), f.zeta.z2.real(), f.zeta.z2.imag()}}};
  }
  return j;
}

json to_json(const BoundsReport& r) {
  json j = json::object();
  for (const auto& c : r.checks)
    j[c.name] = {{"measured", number(c.measured)},
                 {"bound", number(c.bound)},
                 {"margin", number(c.margin)},
                 {"enforced", c.enforced},
                 {"pass", c.pass}};
  return j;
}

void write_field_csv(const fs::path& path, const ScalarField& u) {
  const int n = u.grid().n();
  std::string text;
  text.reserve(std::size_t(n) * std::size_t(n) * 24);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) text += ',';
      text += format_double(u(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

ScalarField read_field_csv(const fs::path& path, const GridPtr& grid) {
  const std::string text = read_text(path);
  const int n = grid->n();
  Eigen::ArrayXd v(grid->size());
  std::istringstream in(text);
  std::string line;
  int i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= n) throw GridMismatch(path.string() + " has more than " + std::to_string(n) + " rows");
    std::istringstream row(line);
    std::string cell;
    int j = 0;
    while (std::getline(row, cell, ',')) {
      if (j >= n) throw GridMismatch(path.string() + " row " + std::to_string(i) + " is too long");
      try {
        v[Eigen::Index(grid->index(i, j))] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": bad value '" + cell + "'");
      }
      ++j;
    }
    if (j != n) throw GridMismatch(path.string() + " row " + std::to_string(i) + " has " + std::to_string(j) + " values");
    ++i;
  }
  if (i != n) throw GridMismatch(path.string() + " has " + std::to_string(i) + " rows, expected " + std::to_string(n));
  return ScalarField(grid, std::move(v));
}

int run(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path out = config.output_dir;
  if (config.system != SystemChoice::both) {
    const SystemKind k = config.system == SystemChoice::sys1 ? SystemKind::sys1 : SystemKind::sys2;
    return run_system(config, k, out, options)["exit_code"].get<int>();
  }
  fs::create_directories(out);
  write_text(out / "config.txt", to_text(config));
  json index;
  index["schema_version"] = kSummarySchemaVersion;
  index["mode"] = options.mode == RunMode::init ? "init" : "solve";
  index["system"] = "both";
  index["config"] = to_json(config);
  int code = kExitOk;
  for (SystemKind k : {SystemKind::sys1, SystemKind::sys2}) {
    const std::string name(to_string(k));
    const json s = run_system(config, k, out / name, options);
    index["runs"][name] = {{"dir", name}, {"status", s["status"]}, {"failure", s["failure"]}};
    if (s["exit_code"].get<int>() != kExitOk) code = kExitFailed;
  }
  index["status"] = code == kExitOk ? "ok" : "failed";
  index["exit_code"] = code;
  write_json(out / "summary.json", index);
  return code;
}

namespace {

struct StoredRun {
  RunConfig config;
  json summary;
  SystemKind system = SystemKind::sys1;
};

StoredRun load_run(const fs::path& dir) {
  StoredRun r;
  r.config = load_config(dir / "config.txt");
  r.summary = read_json(dir / "summary.json");
  const std::string sys = r.summary.value("system", "");
  if (sys == "sys1") r.system = SystemKind::sys1;
  else if (sys == "sys2") r.system = SystemKind::sys2;
  else throw IncompatibleRuns(dir.string() + " is not a single-system run");
  return r;
}

json verify_single(const fs::path& dir, const Logger& log) {
  const StoredRun run = load_run(dir);
  json out;
  out["schema_version"] = kSummarySchemaVersion;
  out["system"] = std::string(to_string(run.system));
  out["failure"] = nullptr;
  bool ok = false;
  try {
    if (run.summary.value("status", "") != "ok" || run.summary.value("mode", "") != "solve")
      throw BoundViolation("run did not complete a solve");
    const auto& c = run.config;
    const GridPtr grid = TorusGrid::create(c.n, c.deg_l);
    const SectionPtr section = make_section(c, grid);
    VortexParams p;
    p.r1 = c.r1;
    p.r2 = c.r2;
    p.deg_l = c.deg_l;
    p.alpha = run.summary.at("calibration").at("alpha").get<double>();
    const auto& eps = run.summary.at("calibration").at("epsilon");
    p.epsilon = eps.is_null() ? 1.0 : eps.get<double>();

    const MetricState s0(read_field_csv(field_path(dir, "f", 0.0), grid),
                         read_field_csv(field_path(dir, "psi", 0.0), grid), section);
    const MetricState s1(read_field_csv(field_path(dir, "f", 1.0), grid),
                         read_field_csv(field_path(dir, "psi", 1.0), grid), section);
    const RhsData rhs = compute_rhs_t0(s0, p);
    const VortexParams p1 = p.at(1.0);
    const double rf = (determinant_lhs(s1, p1) - rhs.a0).sup_norm();
    const double rpsi =
        (run.system == SystemKind::sys1 ? residual_sys1_psi(s1, p1) : residual_sys2_psi(s1, p1)).sup_norm();
    const double tol = 10.0 * c.solver.newton_tol;
    const BoundsReport bounds = check_bounds(s1, p1, rhs, run.system, nullptr, c.solver.report_tol);
    const PositivityReport pos = positivity_check(curvature_coeffs(s1, p1, p1.shift()), c.n_samples, c.seed);
    out["residual_f"] = rf;
    out["residual_psi"] = rpsi;
    out["residual_tol"] = tol;
    out["bounds"] = to_json(bounds);
    out["positivity"] = to_json(pos);
    ok = rf <= tol && rpsi <= tol && bounds.passed() && pos.passed();
    if (!(rf <= tol && rpsi <= tol))
      out["failure"] = {{"error", "NoConvergence"}, {"message", "stored endpoint residual exceeds tolerance"}};
    else if (!bounds.passed())
      out["failure"] = {{"error", "BoundViolation"}, {"message", "endpoint violates " + bounds.failures().front()}};
    else if (!pos.passed())
      out["failure"] = {{"error", "NotPositive"}, {"message", "endpoint positivity check failed"}};
  } catch (const Error& e) {
    out["failure"] = failure_record(e);
  }
  log(dir.string() + ": verify " + (ok ? "ok" : "failed"));
  out["status"] = ok ? "ok" : "failed";
  out["exit_code"] = ok ? kExitOk : kExitFailed;
  write_json(dir / "verify.json", out);
  return out;
}

}  // namespace

int verify(const fs::path& run_dir, const RunOptions& options) {
  const Logger log(options);
  const json top = read_json(run_dir / "summary.json");
  if (top.value("system", "") != "both") return verify_single(run_dir, log)["exit_code"].get<int>();
  int code = kExitOk;
  for (const char* name : {"sys1", "sys2"})
    if (verify_single(run_dir / name, log)["exit_code"].get<int>() != kExitOk) code = kExitFailed;
  return code;
}

json export_comparison(const fs::path& dir_a, const fs::path& dir_b) {
  const StoredRun a = load_run(dir_a);
  const StoredRun b = load_run(dir_b);
  if (a.system != b.system) throw IncompatibleRuns("runs solve different systems");

  // Differences in output location and seed are irrelevant to the comparison.
  auto normalized = [](RunConfig c) {
    c.output_dir.clear();
    c.seed = 0;
    return c;
  };
  RunConfig ca = normalized(a.config), cb = normalized(b.config);
  std::vector<std::string> differing;
  if (ca.epsilon != cb.epsilon) differing.push_back("epsilon");
  if (ca.n != cb.n) differing.push_back("n");
  cb.epsilon = ca.epsilon;
  cb.n = ca.n;
  if (to_text(ca) != to_text(cb)) throw IncompatibleRuns("configs differ beyond epsilon and n");
  if (differing.size() > 1) throw IncompatibleRuns("configs differ in both epsilon and n");
  for (const auto* r : {&a, &b})
    if (r->summary.value("status", "") != "ok" || r->summary.value("mode", "") != "solve")
      throw IncompatibleRuns("both runs must be completed solves");

  const std::string study = differing.empty() ? "identical" : differing.front() == "epsilon" ? "epsilon" : "refinement";
  json out;
  out["schema_version"] = kSummarySchemaVersion;
  out["study"] = study;
  out["system"] = std::string(to_string(a.system));

  auto side = [](const StoredRun& r) {
    return json{{"n", r.config.n},
                {"alpha", r.summary["calibration"]["alpha"]},
                {"epsilon", r.summary["calibration"]["epsilon"]},
                {"eps_psi_sup", r.summary["t0"]["eps_psi_sup"]},
                {"path_sup_lap_psi", r.summary["path"]["sup_lap_psi"]}};
  };
  out["a"] = side(a);
  out["b"] = side(b);

  auto ratio = [](double x, double y) { return y == 0.0 && x == 0.0 ? 1.0 : y / x; };
  const double r_eps = ratio(out["a"]["eps_psi_sup"].get<double>(), out["b"]["eps_psi_sup"].get<double>());
  const double r_lap =
      ratio(out["a"]["path_sup_lap_psi"].get<double>(), out["b"]["path_sup_lap_psi"].get<double>());
  auto within = [](double r) { return r >= kRatioLow && r <= kRatioHigh; };
  out["ratios"] = {{"eps_psi_sup", number(r_eps)}, {"path_sup_lap_psi", number(r_lap)}};
  out["ratio_bounds"] = {kRatioLow, kRatioHigh};
  bool pass = within(r_eps) && within(r_lap);

  if (study == "refinement") {
    const StoredRun& coarse = a.config.n < b.config.n ? a : b;
    const StoredRun& fine = a.config.n < b.config.n ? b : a;
    const fs::path& dc = a.config.n < b.config.n ? dir_a : dir_b;
    const fs::path& df = a.config.n < b.config.n ? dir_b : dir_a;
    const GridPtr gc = TorusGrid::create(coarse.config.n, coarse.config.deg_l);
    const GridPtr gf = TorusGrid::create(fine.config.n, fine.config.deg_l);
    const double dfield = sup_distance(resample(read_field_csv(field_path(dc, "f", 1.0), gc), gf),
                                       read_field_csv(field_path(df, "f", 1.0), gf));
    const double dpsi = sup_distance(resample(read_field_csv(field_path(dc, "psi", 1.0), gc), gf),
                                     read_field_csv(field_path(df, "psi", 1.0), gf));
    out["refinement"] = {{"sup_diff_f", dfield}, {"sup_diff_psi", dpsi}, {"tol", kRefinementTol}};
    // Ratios are informational here; the refinement criterion is the field agreement.
    pass = dfield <= kRefinementTol && dpsi <= kRefinementTol;
  }
  out["pass"] = pass;
  return out;
}

int compare(const fs::path& run_a, const fs::path& run_b, const fs::path& out, const RunOptions& options) {
  const Logger log(options);
  json report;
  try {
    report = export_comparison(run_a, run_b);
  } catch (const Error& e) {
    report = {{"schema_version", kSummarySchemaVersion}, {"pass", false}, {"failure", failure_record(e)}};
  }
  fs::create_directories(out);
  write_json(out / "comparison.json", report);
  log("compare: " + std::string(report["pass"].get<bool>() ? "pass" : "fail"));
  return report["pass"].get<bool>() ? kExitOk : kExitFailed;
}

}  // namespace vortex

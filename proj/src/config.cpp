#include "vortex/config.hpp"

#include "vortex/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vortex {

std::string_view to_string(SystemChoice system) {
  switch (system) {
    case SystemChoice::sys1: return "sys1";
    case SystemChoice::sys2: return "sys2";
    case SystemChoice::both: return "both";
  }
  return "unknown";
}

std::string_view to_string(SectionKind section) { return section == SectionKind::theta ? "theta" : "zero"; }

std::string_view to_string(Predictor predictor) { return predictor == Predictor::trivial ? "trivial" : "secant"; }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void RunConfig::validate() const {
  if (n < 16 || n % 2 != 0) throw ConfigError("n must be even and at least 16, got " + std::to_string(n));
  if (r1 < 1) throw ConfigError("r1 must be at least 1");
  if (r2 < 1) throw ConfigError("r2 must be at least 1");
  if (deg_l < 1) throw ConfigError("deg_l must be at least 1");
  if (section == SectionKind::theta && deg_l != 1)
    throw ConfigError("the theta section is only available for deg_l = 1");
  if (alpha && !(*alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(alpha_max >= 0.0)) throw ConfigError("alpha_max must be non-negative");
  if (!(epsilon_min > 0.0)) throw ConfigError("epsilon_min must be positive");
  if (max_restarts < 0) throw ConfigError("max_restarts must be non-negative");
  if (n_samples < 1) throw ConfigError("n_samples must be at least 1");
  for (double t : snapshot_times)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("snapshot times must lie in [0, 1]");
  solver.validate();
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("expected a number, got '" + std::string(v) + "'");
  return out;
}

long long to_integer(std::string_view v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("expected an integer, got '" + std::string(v) + "'");
  return out;
}

int to_int(std::string_view v) {
  const long long x = to_integer(v);
  if (x < -(1LL << 31) || x >= (1LL << 31)) throw ConfigError("integer out of range: " + std::string(v));
  return int(x);
}

std::optional<double> auto_or_double(std::string_view v) {
  if (v == "auto") return std::nullopt;
  return to_double(v);
}

std::vector<double> to_list(std::string_view v) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (item.empty()) throw ConfigError("empty entry in list");
    out.push_back(to_double(item));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"system",
       [](RunConfig& c, std::string_view v) {
         if (v == "sys1") c.system = SystemChoice::sys1;
         else if (v == "sys2") c.system = SystemChoice::sys2;
         else if (v == "both") c.system = SystemChoice::both;
         else throw ConfigError("expected sys1, sys2 or both");
       }},
      {"n", [](RunConfig& c, std::string_view v) { c.n = to_int(v); }},
      {"r1", [](RunConfig& c, std::string_view v) { c.r1 = to_int(v); }},
      {"r2", [](RunConfig& c, std::string_view v) { c.r2 = to_int(v); }},
      {"deg_l", [](RunConfig& c, std::string_view v) { c.deg_l = to_int(v); }},
      {"alpha", [](RunConfig& c, std::string_view v) { c.alpha = auto_or_double(v); }},
      {"epsilon", [](RunConfig& c, std::string_view v) { c.epsilon = auto_or_double(v); }},
      {"alpha_max", [](RunConfig& c, std::string_view v) { c.alpha_max = to_double(v); }},
      {"epsilon_min", [](RunConfig& c, std::string_view v) { c.epsilon_min = to_double(v); }},
      {"max_restarts", [](RunConfig& c, std::string_view v) { c.max_restarts = to_int(v); }},
      {"section",
       [](RunConfig& c, std::string_view v) {
         if (v == "theta") c.section = SectionKind::theta;
         else if (v == "zero") c.section = SectionKind::zero;
         else throw ConfigError("expected theta or zero");
       }},
      {"output_dir", [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); }},
      {"seed",
       [](RunConfig& c, std::string_view v) {
         const long long s = to_integer(v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.seed = std::uint64_t(s);
       }},
      {"n_samples", [](RunConfig& c, std::string_view v) { c.n_samples = to_int(v); }},
      {"snapshots", [](RunConfig& c, std::string_view v) { c.snapshot_times = to_list(v); }},
      {"newton_tol", [](RunConfig& c, std::string_view v) { c.solver.newton_tol = to_double(v); }},
      {"max_newton", [](RunConfig& c, std::string_view v) { c.solver.max_newton = to_int(v); }},
      {"dt0", [](RunConfig& c, std::string_view v) { c.solver.dt0 = to_double(v); }},
      {"dt_min", [](RunConfig& c, std::string_view v) { c.solver.dt_min = to_double(v); }},
      {"dt_max", [](RunConfig& c, std::string_view v) { c.solver.dt_max = to_double(v); }},
      {"damping", [](RunConfig& c, std::string_view v) { c.solver.damping = to_double(v); }},
      {"compat_tol", [](RunConfig& c, std::string_view v) { c.solver.compat_tol = to_double(v); }},
      {"sigma_min_tol", [](RunConfig& c, std::string_view v) { c.solver.sigma_min_tol = to_double(v); }},
      {"report_tol", [](RunConfig& c, std::string_view v) { c.solver.report_tol = to_double(v); }},
      {"predictor",
       [](RunConfig& c, std::string_view v) {
         if (v == "trivial") c.solver.predictor = Predictor::trivial;
         else if (v == "secant") c.solver.predictor = Predictor::secant;
         else throw ConfigError("expected trivial or secant");
       }},
  };
  return table;
}

/// Single-field invariants; cross-field ones are checked after parsing.
void check_field(const RunConfig& c, std::string_view key) {
  RunConfig probe;  // defaults are valid, so only `key` can fail
  if (key == "n") probe.n = c.n;
  else if (key == "r1") probe.r1 = c.r1;
  else if (key == "r2") probe.r2 = c.r2;
  else if (key == "deg_l") probe.deg_l = c.deg_l, probe.section = SectionKind::zero;
  else if (key == "alpha") probe.alpha = c.alpha;
  else if (key == "epsilon") probe.epsilon = c.epsilon;
  else if (key == "alpha_max") probe.alpha_max = c.alpha_max;
  else if (key == "epsilon_min") probe.epsilon_min = c.epsilon_min;
  else if (key == "max_restarts") probe.max_restarts = c.max_restarts;
  else if (key == "n_samples") probe.n_samples = c.n_samples;
  else if (key == "snapshots") probe.snapshot_times = c.snapshot_times;
  else if (key == "dt_min" || key == "dt0") {
    probe.solver.dt0 = key == "dt0" ? c.solver.dt0 : probe.solver.dt0;
    probe.solver.dt_min = key == "dt_min" ? c.solver.dt_min : std::min(probe.solver.dt_min, c.solver.dt0);
    if (key == "dt0" && !(c.solver.dt0 > 0.0)) throw ConfigError("dt0 must be positive");
    if (key == "dt_min" && !(c.solver.dt_min > 0.0)) throw ConfigError("dt_min must be positive");
    return;
  } else {
    const RunConfig defaults;
    probe.solver = defaults.solver;
    SolverConfig s = c.solver;
    s.dt0 = defaults.solver.dt0;
    s.dt_min = defaults.solver.dt_min;
    probe.solver = s;
  }
  probe.validate();
}

std::string where(int line, std::string_view key) {
  return "line " + std::to_string(line) + ", key '" + std::string(key) + "': ";
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where(line_no, key) + "unknown key");
    if (seen.count(key)) throw ConfigError(where(line_no, key) + "repeated key");
    if (value.empty()) throw ConfigError(where(line_no, key) + "missing value");
    seen.emplace(std::string(key), line_no);
    try {
      it->second(cfg, value);
      check_field(cfg, key);
    } catch (const ConfigError& e) {
      throw ConfigError(where(line_no, key) + e.what());
    }
  }

  // Cross-field checks are attributed to the later of the keys involved.
  auto blame = [&](std::initializer_list<std::string_view> keys) -> std::pair<int, std::string> {
    std::pair<int, std::string> out{0, std::string(*keys.begin())};
    for (auto k : keys)
      if (auto f = seen.find(k); f != seen.end() && f->second >= out.first) out = {f->second, std::string(k)};
    return out;
  };
  auto cross = [&](bool ok, std::initializer_list<std::string_view> keys, const std::string& msg) {
    if (ok) return;
    const auto [line, key] = blame(keys);
    throw ConfigError((line ? where(line, key) : "key '" + key + "': ") + msg);
  };
  cross(cfg.solver.dt_min <= cfg.solver.dt0, {"dt_min", "dt0"}, "dt_min must not exceed dt0");
  cross(!(cfg.section == SectionKind::theta && cfg.deg_l != 1), {"deg_l", "section"},
        "the theta section is only available for deg_l = 1");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("auto"); };
  os << "system = " << to_string(c.system) << '\n'
     << "n = " << c.n << '\n'
     << "r1 = " << c.r1 << '\n'
     << "r2 = " << c.r2 << '\n'
     << "deg_l = " << c.deg_l << '\n'
     << "section = " << to_string(c.section) << '\n'
     << "alpha = " << opt(c.alpha) << '\n'
     << "epsilon = " << opt(c.epsilon) << '\n'
     << "alpha_max = " << format_double(c.alpha_max) << '\n'
     << "epsilon_min = " << format_double(c.epsilon_min) << '\n'
     << "max_restarts = " << c.max_restarts << '\n'
     << "output_dir = " << c.output_dir << '\n'
     << "seed = " << c.seed << '\n'
     << "n_samples = " << c.n_samples << '\n'
     << "snapshots = ";
  for (std::size_t k = 0; k < c.snapshot_times.size(); ++k)
    os << (k ? ", " : "") << format_double(c.snapshot_times[k]);
  os << '\n'
     << "newton_tol = " << format_double(c.solver.newton_tol) << '\n'
     << "max_newton = " << c.solver.max_newton << '\n'
     << "dt0 = " << format_double(c.solver.dt0) << '\n'
     << "dt_min = " << format_double(c.solver.dt_min) << '\n'
     << "dt_max = " << format_double(c.solver.dt_max) << '\n'
     << "damping = " << format_double(c.solver.damping) << '\n'
     << "compat_tol = " << format_double(c.solver.compat_tol) << '\n'
     << "sigma_min_tol = " << format_double(c.solver.sigma_min_tol) << '\n'
     << "report_tol = " << format_double(c.solver.report_tol) << '\n'
     << "predictor = " << to_string(c.solver.predictor) << '\n';
  return os.str();
}

}  // namespace vortex

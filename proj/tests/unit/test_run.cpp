#include "vortex/errors.hpp"
#include "vortex/run.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace vortex;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vortex_unit_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json summary(const fs::path& dir) { return json::parse(slurp(dir / "summary.json")); }

RunConfig config(const std::string& text, const fs::path& out) {
  RunConfig c = parse_config(text);
  c.output_dir = out.string();
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::istringstream in(row);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
  return out;
}

RunOptions quiet() {
  RunOptions o;
  o.quiet = true;
  return o;
}

}  // namespace

TEST_CASE("degenerate run writes a complete, all-positive trace") {
  const auto out = scratch("degenerate");
  REQUIRE(run(config("section = zero\nn = 16", out), quiet()) == kExitOk);
  const auto trace = lines(slurp(out / "trace.csv"));
  REQUIRE(trace.size() >= 3);
  CHECK(trace[0].rfind("t,dt,newton_iterations", 0) == 0);
  const auto header = split(trace[0]);
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const auto row = split(trace[k]);
    REQUIRE(row.size() == header.size());
    for (std::size_t c = 0; c < row.size(); ++c)
      if (header[c].rfind("margin_", 0) == 0) CHECK(std::stod(row[c]) >= 0.0);
  }
  const json s = summary(out);
  CHECK(s["schema_version"] == kSummarySchemaVersion);
  CHECK(s["status"] == "ok");
  CHECK(s["path"]["reached_t"] == 1.0);
  CHECK(s["positivity"]["passed"] == true);
  CHECK(fs::exists(out / "fields_f_t0.csv"));
  CHECK(fs::exists(out / "fields_psi_t1.csv"));
  CHECK(lines(slurp(out / "fields_psi_t1.csv")).size() == 16);
}

TEST_CASE("theta run reports the psi bound and is bit-reproducible") {
  const auto a = scratch("theta_a"), b = scratch("theta_b");
  REQUIRE(run(config("n = 32", a), quiet()) == kExitOk);
  REQUIRE(run(config("n = 32", b), quiet()) == kExitOk);
  const json s = summary(a);
  CHECK(s["endpoint"]["psi_max"].get<double>() <= 1.0 / 6.0);
  CHECK(s["root_oracle"]["mean_ok"] == true);
  // Summaries embed output_dir only through config.txt, which differs.
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "fields_f_t1.csv") == slurp(b / "fields_f_t1.csv"));
}

TEST_CASE("fixed alpha = 0 never crashes") {
  const auto out = scratch("alpha0");
  const int code = run(config("n = 32\nalpha = 0", out), quiet());
  const json s = summary(out);
  if (code == kExitOk) {
    CHECK(s["failure"].is_null());
  } else {
    const std::string kind = s["failure"]["error"];
    CHECK((kind == "CalibrationError" || kind == "BranchLost"));
  }
}

TEST_CASE("a stalled path is a structured failure record") {
  const auto out = scratch("stuck");
  CHECK(run(config("n = 32\nalpha = 1", out), quiet()) == kExitFailed);
  const json s = summary(out);
  CHECK(s["status"] == "failed");
  CHECK(s["failure"]["error"] == "PathStuck");
  CHECK(s["failure"]["last_good_t"].get<double>() < 0.01);
  CHECK(lines(slurp(out / "trace.csv")).size() >= 2);
}

TEST_CASE("both systems write subdirectories and an index") {
  const auto out = scratch("both");
  REQUIRE(run(config("system = both\nn = 16", out), quiet()) == kExitOk);
  const json s = summary(out);
  CHECK(s["runs"]["sys1"]["status"] == "ok");
  CHECK(s["runs"]["sys2"]["status"] == "ok");
  CHECK(summary(out / "sys2")["calibration"]["epsilon"].get<double>() > 0.0);
  CHECK(verify(out, quiet()) == kExitOk);
}

TEST_CASE("init solves t = 0 only") {
  const auto out = scratch("init");
  RunOptions o = quiet();
  o.mode = RunMode::init;
  REQUIRE(run(config("system = sys2\nn = 16", out), o) == kExitOk);
  const json s = summary(out);
  CHECK(s["mode"] == "init");
  CHECK(s.contains("t0"));
  CHECK_FALSE(s.contains("path"));
  CHECK(fs::exists(out / "fields_psi_t0.csv"));
  CHECK_FALSE(fs::exists(out / "trace.csv"));
}

TEST_CASE("verify re-checks a stored endpoint and catches tampering") {
  const auto out = scratch("verify");
  REQUIRE(run(config("n = 16", out), quiet()) == kExitOk);
  CHECK(verify(out, quiet()) == kExitOk);
  CHECK(json::parse(slurp(out / "verify.json"))["status"] == "ok");
  std::ofstream(out / "fields_f_t1.csv", std::ios::trunc) << slurp(out / "fields_f_t0.csv").substr(0, 40) << "\n";
  CHECK(verify(out, quiet()) == kExitFailed);
  CHECK(json::parse(slurp(out / "verify.json"))["failure"]["error"] == "GridMismatch");
}

TEST_CASE("field csv round trip") {
  const auto g = TorusGrid::create(16);
  const auto u = ScalarField::from_function(g, [](double x, double y) { return std::sin(7 * x) / 3 + y * 1e-17; });
  const auto p = scratch("fields") / "u.csv";
  fs::create_directories(p.parent_path());
  write_field_csv(p, u);
  CHECK(sup_distance(read_field_csv(p, g), u) == 0.0);
  CHECK_THROWS_AS(read_field_csv(p, TorusGrid::create(32)), GridMismatch);
}

TEST_CASE("comparisons") {
  const auto a = scratch("cmp_a"), b = scratch("cmp_b"), c = scratch("cmp_c"), d = scratch("cmp_d");
  REQUIRE(run(config("system = sys2\nn = 16\nepsilon = 1", a), quiet()) == kExitOk);
  REQUIRE(run(config("system = sys2\nn = 16\nepsilon = 1\nseed = 3", b), quiet()) == kExitOk);
  REQUIRE(run(config("system = sys2\nn = 16\nepsilon = 2", c), quiet()) == kExitOk);
  REQUIRE(run(config("system = sys2\nn = 16\nepsilon = 1\nr2 = 2", d), quiet()) == kExitOk);

  const json same = export_comparison(a, b);
  CHECK(same["study"] == "identical");
  CHECK(same["ratios"]["eps_psi_sup"] == 1.0);
  CHECK(same["ratios"]["path_sup_lap_psi"] == 1.0);

  const json eps = export_comparison(a, c);
  CHECK(eps["study"] == "epsilon");
  const double r_eps = eps["ratios"]["eps_psi_sup"];
  CHECK((r_eps >= 0.8 && r_eps <= 1.25));
  // sup |Delta psi| decays like 1/eps, so this ratio falls below the band.
  CHECK(eps["ratios"]["path_sup_lap_psi"].get<double>() < 0.8);
  CHECK(eps["pass"] == false);

  CHECK_THROWS_AS(export_comparison(a, d), IncompatibleRuns);
  const auto out = scratch("cmp_out");
  CHECK(compare(a, d, out, quiet()) == kExitFailed);
  CHECK(json::parse(slurp(out / "comparison.json"))["failure"]["error"] == "IncompatibleRuns");
}

TEST_CASE("refinement comparison") {
  const auto a = scratch("ref_a"), b = scratch("ref_b");
  REQUIRE(run(config("n = 32", a), quiet()) == kExitOk);
  REQUIRE(run(config("n = 64", b), quiet()) == kExitOk);
  const json r = export_comparison(a, b);
  CHECK(r["study"] == "refinement");
  CHECK(r["refinement"]["sup_diff_f"].get<double>() <= 1e-6);
  CHECK(r["pass"] == true);
}

TEST_CASE("command line exit codes") {
  const char* cli = std::getenv("VORTEX_CLI");
  if (!cli) return;
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.cfg") << "n = 15\n";
  std::ofstream(dir / "ok.cfg") << "section = zero\nn = 16\n";
  auto sh = [&](const std::string& args) {
    const int rc = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(sh("solve --config " + (dir / "bad.cfg").string()) == kExitUsage);
  CHECK(sh("solve --bogus") == kExitUsage);
  CHECK(sh("solve --quiet --config " + (dir / "ok.cfg").string() + " --out " + (dir / "run").string() + " --seed 5") ==
        kExitOk);
  CHECK(parse_config(slurp(dir / "run" / "config.txt")).seed == 5);
  CHECK(sh("verify --quiet --out " + (dir / "run").string()) == kExitOk);
  CHECK(sh("init --quiet --config " + (dir / "ok.cfg").string() + " --out " + (dir / "init").string()) == kExitOk);
  CHECK(sh("compare --quiet " + (dir / "run").string() + " " + (dir / "run").string() + " --out " +
           (dir / "cmp").string()) == kExitOk);
}

#include "vortex/config.hpp"
#include "vortex/errors.hpp"

#include <doctest.h>

#include <string>

using namespace vortex;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.system == SystemChoice::sys1);
  CHECK(c.n == 64);
  CHECK(c.r1 == 1);
  CHECK(c.r2 == 1);
  CHECK(c.section == SectionKind::theta);
  CHECK_FALSE(c.alpha.has_value());
  CHECK_FALSE(c.epsilon.has_value());
  CHECK(c.snapshot_times == std::vector<double>{0.0, 1.0});
  CHECK(c.solver.newton_tol == 1e-10);
}

TEST_CASE("values, comments and blank lines") {
  const RunConfig c = parse_config("# study\nsystem = sys2\n\nepsilon = 0.5   # fixed\nalpha=auto\nsnapshots = 0, 0.5,1\n");
  CHECK(c.system == SystemChoice::sys2);
  REQUIRE(c.epsilon.has_value());
  CHECK(*c.epsilon == 0.5);
  CHECK_FALSE(c.alpha.has_value());
  CHECK(c.snapshot_times == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("errors name the line and key") {
  CHECK(error_of("n = 15") == "line 1, key 'n': n must be even and at least 16, got 15");
  CHECK(error_of("\nn = 8").find("line 2, key 'n'") == 0);
  CHECK(error_of("r1 = 0").find("key 'r1'") != std::string::npos);
  CHECK(error_of("alpha = -1").find("key 'alpha'") != std::string::npos);
  CHECK(error_of("epsilon = 0").find("key 'epsilon'") != std::string::npos);
  CHECK(error_of("colour = red").find("unknown key") != std::string::npos);
  CHECK(error_of("n = 32\nn = 64").find("line 2, key 'n': repeated") == 0);
  CHECK(error_of("n = sixty").find("expected an integer") != std::string::npos);
  CHECK(error_of("just words").find("line 1") == 0);
  CHECK(error_of("system = sys3").find("key 'system'") != std::string::npos);
}

TEST_CASE("cross-field errors blame the later key") {
  CHECK(error_of("dt0 = 0.01\ndt_min = 0.1").find("line 2, key 'dt_min'") == 0);
  CHECK(error_of("dt_min = 0.1\ndt0 = 0.01").find("line 2, key 'dt0'") == 0);
  CHECK(error_of("deg_l = 2").find("key 'deg_l'") != std::string::npos);
  CHECK_NOTHROW(parse_config("deg_l = 2\nsection = zero"));
}

TEST_CASE("canonical text round-trips") {
  RunConfig c = parse_config("system = both\nn = 32\nalpha = 0.75\nseed = 9\npredictor = secant\ndt0 = 0.03125");
  const RunConfig back = parse_config(to_text(c));
  CHECK(to_text(back) == to_text(c));
  CHECK(*back.alpha == 0.75);
  CHECK(back.solver.predictor == Predictor::secant);
  CHECK(back.solver.dt0 == 0.03125);
  CHECK(format_double(0.1) == "0.1");
}

#include "vortex/estimates.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace vortex;

namespace {

SectionPtr zero(const GridPtr& g) { return std::make_shared<const SectionData>(zero_section(g)); }

}  // namespace

TEST_CASE("check names are stable and every check is reported") {
  const auto& names = bound_check_names();
  REQUIRE(names.size() == 11);
  CHECK(names.front() == "phi_g2_below_one");
  CHECK(names.back() == "lap_f_uniform");
  const auto g = TorusGrid::create(16);
  const MetricState s(ScalarField(g, 0.0), ScalarField(g, 0.0), zero(g));
  VortexParams p;
  const BoundsReport r = check_bounds(s, p, compute_rhs_t0(s, p), SystemKind::sys1);
  REQUIRE(r.checks.size() == names.size());
  for (std::size_t k = 0; k < names.size(); ++k) CHECK(r.checks[k].name == names[k]);
  CHECK(r.passed());
  CHECK(r.failures().empty());
}

TEST_CASE("system-specific checks are informational for the other system") {
  const auto g = TorusGrid::create(16);
  // psi = 0.3 breaks the decoupled upper bound 3/18 but not eps psi <= 1/6 at eps = 0.5.
  const MetricState s(ScalarField(g, -0.15), ScalarField(g, 0.3), zero(g));
  VortexParams p;
  p.epsilon = 0.5;
  const RhsData rhs = compute_rhs_t0(s, p);
  const BoundsReport r1 = check_bounds(s, p, rhs, SystemKind::sys1);
  CHECK_FALSE(r1.passed());
  CHECK(r1.at("psi_upper").margin == doctest::Approx(1.0 / 6.0 - 0.3));
  const BoundsReport r2 = check_bounds(s, p, rhs, SystemKind::sys2);
  CHECK_FALSE(r2.at("psi_upper").enforced);
  CHECK(r2.at("eps_psi_upper").pass);
  // The trace residual is a nonzero constant here, so compatibility fails.
  CHECK_FALSE(r2.at("psi_compat").pass);
  CHECK(r2.failures() == std::vector<std::string>{"psi_compat"});
}

TEST_CASE("branch margin follows the shifted factor") {
  const auto g = TorusGrid::create(16);
  const auto f = ScalarField::from_function(g, [](double x, double) { return std::cos(2 * std::numbers::pi * x); });
  const MetricState s(f, ScalarField(g, 0.0), zero(g));
  VortexParams p;
  p.alpha = 1.5;
  const RhsData rhs = compute_rhs_t0(s, p);
  CHECK(check_bounds(s, p, rhs, SystemKind::sys1).at("branch").margin ==
        doctest::Approx(1.0 - std::numbers::pi + 4.5));
  CHECK(check_bounds(s, p.at(1.0), rhs, SystemKind::sys1).at("branch").margin ==
        doctest::Approx(1.0 - std::numbers::pi));
  CHECK_FALSE(check_bounds(s, p.at(1.0), rhs, SystemKind::sys1).passed());
}

TEST_CASE("uniformity is measured against the path history") {
  const auto g = TorusGrid::create(16);
  const auto psi = ScalarField::from_function(g, [](double x, double) { return 0.01 * std::sin(2 * std::numbers::pi * x); });
  const MetricState s(ScalarField(g, 0.0), psi, zero(g));
  PathHistory h;
  VortexParams p;
  const RhsData rhs{ScalarField(g, 1.0)};
  CHECK(std::isinf(check_bounds(s, p, rhs, SystemKind::sys1, &h).at("lap_psi_uniform").bound));
  h.record(s);
  const MetricState big(ScalarField(g, 0.0), 20.0 * psi, zero(g));
  const auto r = check_bounds(big, p, rhs, SystemKind::sys1, &h);
  CHECK(r.at("lap_psi_uniform").bound == doctest::Approx(10.0 * s.lap_psi().sup_norm()));
  CHECK_FALSE(r.at("lap_psi_uniform").pass);
}

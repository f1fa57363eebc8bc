#include "vortex/errors.hpp"
#include "vortex/theta.hpp"
#include "vortex/vortex_model.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace vortex;
using std::numbers::pi;

namespace {

SectionPtr share(SectionData s) { return std::make_shared<const SectionData>(std::move(s)); }

}  // namespace

TEST_CASE("params validation and derived coefficients") {
  VortexParams p;
  CHECK_NOTHROW(p.validate());
  p.r1 = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VortexParams{};
  p.epsilon = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VortexParams{1, 1, 2.0, 0.5, 0.25, 1};
  CHECK(p.shift() == doctest::Approx(1.5));
  CHECK(p.coupled_psi_coefficient() == doctest::Approx(2.0 * 3 * 6 * 5 * 0.5));
  CHECK(p.at(1.0).shift() == 0.0);
}

TEST_CASE("degenerate mode: zero fields solve every equation") {
  const auto g = TorusGrid::create(16);
  const auto sec = share(zero_section(g));
  const MetricState s(ScalarField(g, 0.0), ScalarField(g, 0.0), sec);
  VortexParams p;
  CHECK(residual_sys1_psi(s, p).sup_norm() == 0.0);
  const RhsData rhs = compute_rhs_t0(s, p);
  CHECK(rhs.a0.min() == doctest::Approx(1.0 * 2 * 1 * 4 * 2));  // a1 c1 a2 c2 = 2 * 2 * 1 * 4
  for (double t : {0.0, 0.5, 1.0}) {
    const auto [rf, rpsi] = residual_sys2(s, p.at(t), rhs);
    CHECK(rf.sup_norm() == 0.0);
    CHECK(rpsi.sup_norm() == 0.0);
  }
}

TEST_CASE("gradient density matches the covariant derivative of theta") {
  const auto g = TorusGrid::create(64);
  const auto sec = share(build_theta_section(g));
  const MetricState s(ScalarField(g, 0.0), ScalarField(g, 0.0), sec);
  const int m = sec->theta_terms;
  const double c = sec->rescale_factor;
  // |nabla phi|^2 with nabla = d/dz + d log h / dz, h = c exp(-2 pi y^2);
  // i dz ^ dzbar / omega = 1 / pi.
  const auto oracle = ScalarField::from_function(g, [&](double x, double y) {
    std::complex<double> dtheta = 0.0;
    for (int k = -m; k <= m; ++k)
      dtheta += std::complex<double>(0, 2 * pi * k) * std::exp(-pi * k * k) *
                std::exp(std::complex<double>(0, 2 * pi * k) * std::complex<double>(x, y));
    const auto th = theta::value<double>({x, y}, m);
    return c * std::norm(dtheta + std::complex<double>(0, 2 * pi * y) * th) * std::exp(-2 * pi * y * y) / pi;
  });
  CHECK(sup_distance(grad_term(s), oracle) <= 1e-8);
  CHECK(grad_term(s).min() >= -1e-12);
}

TEST_CASE("gradient density of a non-holomorphic profile is rejected") {
  const auto g = TorusGrid::create(32);
  SectionData fake = constant_section(g, 0.0);
  fake.phik2 = ScalarField::from_function(g, [](double x, double) { return 0.25 + 0.2 * std::cos(2 * pi * x); });
  const MetricState s(ScalarField(g, 0.0), ScalarField(g, 0.0), share(std::move(fake)));
  CHECK_THROWS_AS(grad_term(s), NegativityError);
}

TEST_CASE("sys1 and sys2 trace equations agree at t = 0 with f = -psi/2") {
  const auto g = TorusGrid::create(32);
  const auto sec = share(build_theta_section(g));
  const auto psi = ScalarField::from_function(g, [](double x, double y) { return 0.05 * std::sin(2 * pi * (x + y)); });
  const MetricState s(-0.5 * psi, psi, sec);
  VortexParams p;
  // residual_sys1_psi = (2r2+1) L_1 and residual_sys2_psi = (4r2+2)(1+2 alpha) L_1.
  const ScalarField l1 = residual_t0_homotopy(s, p, 1.0);
  CHECK(sup_distance(residual_sys1_psi(s, p), 3.0 * l1) <= 1e-12);
  p.alpha = 0.5;
  CHECK(sup_distance(residual_sys2_psi(s, p), 12.0 * l1) <= 1e-11);
}

TEST_CASE("homotopy start value") {
  const auto g = TorusGrid::create(16);
  const auto sec = share(build_theta_section(g));
  VortexParams p;
  p.r1 = 1;
  const MetricState s(ScalarField(g, 0.0), ScalarField(g, 1.0 / 6.0), sec);
  CHECK(residual_t0_homotopy(s, p, 0.0).sup_norm() <= 1e-15);
  p.epsilon = 4.0;
  const MetricState s4(ScalarField(g, 0.0), ScalarField(g, 1.0 / 24.0), sec);
  CHECK(residual_t0_homotopy(s4, p, 0.0).sup_norm() <= 1e-15);
}

TEST_CASE("frozen right-hand side must be positive") {
  const auto g = TorusGrid::create(16);
  const auto sec = share(zero_section(g));
  const auto f = ScalarField::from_function(g, [](double x, double) { return std::cos(2 * pi * x); });
  // a2 = 1 - pi < 0 while a1 = 2 + pi > 0 at x = 0.
  const MetricState s(f, -2.0 * f, sec);
  VortexParams p;
  CHECK_THROWS_AS(compute_rhs_t0(s, p), PositivityError);
  CHECK_FALSE(alpha_admissible(s, p, 0.5));
  CHECK(alpha_admissible(s, p, 1.0));
  CHECK(calibrate_alpha(s, p) == doctest::Approx(1.5));
  CHECK_THROWS_AS(calibrate_alpha(s, p, 0.5), CalibrationError);
  p.alpha = 1.5;
  CHECK(compute_rhs_t0(s, p).a0.min() > 0.0);
}

TEST_CASE("epsilon calibration") {
  VortexParams p;
  CHECK(calibrate_epsilon(-1.0, p) == doctest::Approx(1.0));
  CHECK(calibrate_epsilon(-100.0, p) == doctest::Approx(2.0 * 101.0 / 36.0));
  p.alpha = 1.0;
  CHECK(calibrate_epsilon(-100.0, p) == doctest::Approx(2.0 * 101.0 / 108.0));
  CHECK(calibrate_epsilon(-1.0, p, 2.0) == doctest::Approx(4.0));
}

#include "vortex/positivity.hpp"

#include "vortex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace vortex {

ScalarField CurvatureCoeffs::expanded() const { return a1 * c1 * a2 * c2 + g * c1 * a2; }

ScalarField CurvatureCoeffs::factorized() const { return c1 * a2 * (a1 * c2 + g); }

CurvatureCoeffs curvature_coeffs(const MetricState& state, const VortexParams& p, double shift) {
  const double s1 = shift * (2 * p.r1 + 1);
  const double s2 = shift * (4 * p.r2 + 2);
  return CurvatureCoeffs{
      state.lap_f() + state.lap_psi() + (p.r1 + 1 + s1),
      state.phig2() + (2 * p.r2 + s2),
      state.lap_f() + (p.r1 + s1),
      (2 * p.r2 + 2 + s2) - state.phig2(),
      state.gradient_density(),
  };
}

DetIdentity det_identity_check(const CurvatureCoeffs& coeffs, const RhsData& rhs) {
  const ScalarField lhs = coeffs.expanded();
  DetIdentity out;
  out.factorization_gap = sup_distance(coeffs.factorized(), lhs) / std::max(1.0, lhs.sup_norm());
  out.residual = sup_distance(lhs, rhs.a0);
  return out;
}

GriffithsForm griffiths_form(const CurvatureCoeffs& c, std::size_t node, const Direction& zeta) {
  const auto k = Eigen::Index(node);
  const double w1 = std::norm(zeta.z1);
  const double w2 = std::norm(zeta.z2);
  return GriffithsForm{
      c.a1.values()[k] * w1 + c.c1.values()[k] * w2,
      c.a2.values()[k] * w1 + c.c2.values()[k] * w2,
      c.g.values()[k] * w1 * w2,
  };
}

namespace {

struct NodeMin {
  double value = std::numeric_limits<double>::infinity();
  std::size_t node = 0;

  void update(double v, std::size_t k) {
    if (v < value) {
      value = v;
      node = k;
    }
  }
};

NodeMin field_min(const ScalarField& f) {
  NodeMin m;
  for (Eigen::Index k = 0; k < f.values().size(); ++k) m.update(f.values()[k], std::size_t(k));
  return m;
}

PositivityFailure failure_at(const std::string& what, const TorusGrid& g, std::size_t node, Direction zeta,
                             double value) {
  return PositivityFailure{what, int(node / std::size_t(g.n())), int(node % std::size_t(g.n())), zeta, value};
}

}  // namespace

PositivityReport positivity_check(const CurvatureCoeffs& c, int n_samples, std::uint64_t seed) {
  const TorusGrid& g = c.a1.grid();
  PositivityReport r;
  r.n_samples = n_samples;

  NodeMin diag;
  for (const ScalarField* f : {&c.a1, &c.c1, &c.a2, &c.c2}) {
    const NodeMin m = field_min(*f);
    diag.update(m.value, m.node);
  }
  r.min_diagonal = diag.value;
  r.diagonal_ok = diag.value > 0;
  if (!r.diagonal_ok) r.failure = failure_at("diagonal", g, diag.node, {}, diag.value);

  NodeMin dual = field_min(c.a1 * c.c2 + c.g);
  for (const ScalarField* f : {&c.c1, &c.a2}) {
    const NodeMin m = field_min(*f);
    dual.update(m.value, m.node);
  }
  r.min_dual_nakano = dual.value;
  r.dual_nakano_ok = dual.value > 0;
  if (!r.dual_nakano_ok && !r.failure) r.failure = failure_at("dual_nakano", g, dual.node, {}, dual.value);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 2);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  double min_h11 = std::numeric_limits<double>::infinity();
  double min_det = std::numeric_limits<double>::infinity();
  r.griffiths_ok = true;
  for (int s = 0; s < n_samples; ++s) {
    const double th = angle(rng);
    const Direction zeta{std::cos(th), std::polar(std::sin(th), phase(rng))};
    for (std::size_t k = 0; k < g.size(); ++k) {
      const GriffithsForm h = griffiths_form(c, k, zeta);
      min_h11 = std::min(min_h11, h.h11);
      min_det = std::min(min_det, h.det());
      if ((h.h11 <= 0 || h.det() <= 0) && r.griffiths_ok) {
        r.griffiths_ok = false;
        if (!r.failure) r.failure = failure_at("griffiths", g, k, zeta, std::min(h.h11, h.det()));
      }
    }
  }
  r.min_griffiths_h11 = min_h11;
  r.min_griffiths_det = min_det;
  return r;
}

void require_positive(const PositivityReport& report) {
  if (report.passed()) return;
  std::ostringstream os;
  os << "positivity check failed";
  if (report.failure) {
    const auto& f = *report.failure;
    os << ": " << f.subcheck << " at node (" << f.i << ", " << f.j << ") value " << f.value;
    if (f.subcheck == "griffiths") os << " direction (" << f.zeta.z1 << ", " << f.zeta.z2 << ")";
  }
  throw NotPositive(os.str());
}

}  // namespace vortex

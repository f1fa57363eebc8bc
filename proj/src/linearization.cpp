#include "vortex/linearization.hpp"

#include "vortex/errors.hpp"
#include "vortex/positivity.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vortex {

std::string_view to_string(OperatorTag tag) {
  switch (tag) {
    case OperatorTag::sys1_psi: return "sys1_psi";
    case OperatorTag::sys1_f: return "sys1_f";
    case OperatorTag::sys2_coupled: return "sys2_coupled";
    case OperatorTag::s_path: return "s_path";
  }
  return "unknown";
}

namespace {

ScalarField as_field(const GridPtr& grid, const Eigen::VectorXd& v, Eigen::Index offset = 0) {
  const auto n = Eigen::Index(grid->size());
  return ScalarField(grid, v.segment(offset, n).array());
}

/// Inverse of (a Delta - b) diagonalized in Fourier space; b > 0.
ScalarField shifted_laplacian_inverse(const ScalarField& r, double a, double b) {
  return spectral_multiply(r, [a, b](double lambda) { return 1.0 / (a * lambda - b); });
}

struct CoupledMeans {
  double m11, m12, z1, m21, m22, z2;
};

/// Mode-by-mode solve of the constant-coefficient coupled system
/// [m11 L, m12 L + z1; m21 L, m22 L + z2] [F; P] = [R1; R2].
Eigen::VectorXd coupled_constant_solve(const GridPtr& grid, const CoupledMeans& m, const Eigen::VectorXd& r) {
  const auto n = Eigen::Index(grid->size());
  auto s1 = grid->forward(r.head(n).array());
  auto s2 = grid->forward(r.tail(n).array());
  TorusGrid::Spectrum f(s1.size()), p(s1.size());
  const std::size_t cols = grid->spectrum_cols();
  for (int i = 0; i < grid->n(); ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t k = std::size_t(i) * cols + j;
      const double l = grid->mode_eigenvalue(i, int(j));
      if (l == 0.0) {
        f[k] = 0.0;
        p[k] = (m.z1 * s1[k] + m.z2 * s2[k]) / (m.z1 * m.z1 + m.z2 * m.z2);
        continue;
      }
      const double a = m.m11 * l, b = m.m12 * l + m.z1, c = m.m21 * l, d = m.m22 * l + m.z2;
      const double det = a * d - b * c;
      if (std::abs(det) < 1e-300) {
        f[k] = 0.0;
        p[k] = 0.0;
        continue;
      }
      f[k] = (d * s1[k] - b * s2[k]) / det;
      p[k] = (a * s2[k] - c * s1[k]) / det;
    }
  Eigen::VectorXd out(2 * n);
  out.head(n) = grid->inverse(f).matrix();
  out.tail(n) = grid->inverse(p).matrix();
  return out;
}

}  // namespace

ScalarField sys1_f_coefficient(const MetricState& state, const VortexParams& p) {
  const double shift2 = 1.0 + 2.0 * p.shift();
  const CurvatureCoeffs c = curvature_coeffs(state, p, p.shift());
  const ScalarField trace = 2.0 * state.lap_f() + state.lap_psi() + shift2 * (2 * p.r1 + 1);
  return c.c1 * (c.c2 * trace + c.g);
}

LinearOperator linearize(const MetricState& state, const VortexParams& p, OperatorTag tag, double s) {
  const GridPtr grid = state.grid();
  const auto n = Eigen::Index(grid->size());
  LinearOperator op;
  op.tag = tag;
  op.grid = grid;
  op.size = n;
  const double k1 = 2 * p.r1 + 1;

  switch (tag) {
    case OperatorTag::sys1_psi: {
      const double k2 = 2 * p.r2 + 1;
      const double zeroth = k1 * (4 * p.r2 + 2);
      const ScalarField phig2 = state.phig2();
      op.apply = [=](const Eigen::VectorXd& v) {
        const ScalarField dpsi = as_field(grid, v);
        const ScalarField out = k2 * laplacian(dpsi) - k1 * phig2 * dpsi - zeroth * dpsi;
        return Eigen::VectorXd(out.values().matrix());
      };
      const double shift = zeroth + k1 * omega_mean(phig2);
      op.precondition = [=](const Eigen::VectorXd& r) {
        return Eigen::VectorXd(shifted_laplacian_inverse(as_field(grid, r), k2, shift).values().matrix());
      };
      break;
    }
    case OperatorTag::s_path: {
      const double ratio = k1 / double(2 * p.r2 + 1);
      const double zeroth = 2.0 * k1 * p.epsilon;
      const ScalarField phig2 = state.phig2();
      op.apply = [=](const Eigen::VectorXd& v) {
        const ScalarField dpsi = as_field(grid, v);
        const ScalarField out = laplacian(dpsi) - (s * ratio) * phig2 * dpsi - zeroth * dpsi;
        return Eigen::VectorXd(out.values().matrix());
      };
      const double shift = zeroth + s * ratio * omega_mean(phig2);
      op.precondition = [=](const Eigen::VectorXd& r) {
        return Eigen::VectorXd(shifted_laplacian_inverse(as_field(grid, r), 1.0, shift).values().matrix());
      };
      break;
    }
    case OperatorTag::sys1_f: {
      const ScalarField a = sys1_f_coefficient(state, p);
      op.apply = [=](const Eigen::VectorXd& v) {
        return Eigen::VectorXd((a * laplacian(as_field(grid, v))).values().matrix());
      };
      // dLf = r / A projected to mean zero, then df = Delta^{-1} dLf with mean 0.
      op.precondition = [=](const Eigen::VectorXd& r) {
        ScalarField u(grid, r.array() / a.values());
        u -= omega_mean(u);
        return Eigen::VectorXd(poisson_solve(u, 0.0, 1e-6).values().matrix());
      };
      break;
    }
    case OperatorTag::sys2_coupled: {
      op.size = 2 * n;
      const double shift2 = 1.0 + 2.0 * p.shift();
      const double keps = p.coupled_psi_coefficient();
      const CurvatureCoeffs c = curvature_coeffs(state, p, p.shift());
      const ScalarField phig2 = state.phig2();
      const ScalarField lap_psi = state.lap_psi();
      const ScalarField trace = 2.0 * state.lap_f() + lap_psi + shift2 * (2 * p.r1 + 1);
      const ScalarField a2c2c1 = c.a2 * c.c2 * c.c1;
      const ScalarField coef_lf = c.c1 * (c.c2 * (c.a1 + c.a2) + c.g);
      // d LHS / d|phi|^2 with c1 and c2 moving oppositely.
      const ScalarField dlhs_dphi = c.a2 * (c.a1 * (c.c2 - c.c1) + c.g);
      const ScalarField c1a2 = c.c1 * c.a2;
      const ScalarField t2_lf = 4.0 * (phig2 - 1.0);
      const ScalarField t2_lpsi = 2.0 * (phig2 - 1.0) + shift2 * (4 * p.r2 + 2);
      const ScalarField t2_zero = 2.0 * phig2 * trace + keps;

      op.apply = [=](const Eigen::VectorXd& v) {
        const ScalarField df = as_field(grid, v, 0);
        const ScalarField dpsi = as_field(grid, v, n);
        const ScalarField ldf = laplacian(df);
        const ScalarField ldpsi = laplacian(dpsi);
        const ScalarField dphi = -(phig2 * dpsi);
        const ScalarField dg = laplacian(dphi) + (1.0 + lap_psi) * dphi + ldpsi * phig2;
        const ScalarField d1 = coef_lf * ldf + a2c2c1 * ldpsi + dlhs_dphi * dphi + c1a2 * dg;
        const ScalarField d2 = t2_lf * ldf + t2_lpsi * ldpsi - t2_zero * dpsi;
        Eigen::VectorXd out(2 * n);
        out.head(n) = d1.values().matrix();
        out.tail(n) = d2.values().matrix();
        return out;
      };
      const CoupledMeans means{
          omega_mean(coef_lf),
          omega_mean(a2c2c1),
          omega_mean(-(phig2 * dlhs_dphi) - c.g * c1a2),
          omega_mean(t2_lf),
          omega_mean(t2_lpsi),
          -omega_mean(t2_zero),
      };
      op.precondition = [=](const Eigen::VectorXd& r) { return coupled_constant_solve(grid, means, r); };
      break;
    }
  }
  return op;
}

Eigen::MatrixXd assemble_dense(const LinearOperator& op) {
  if (op.grid && op.grid->n() > kDenseMaxN)
    throw SizeError("dense assembly is limited to n <= " + std::to_string(kDenseMaxN) + ", got " +
                    std::to_string(op.grid->n()));
  Eigen::MatrixXd m(op.size, op.size);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.size);
  for (Eigen::Index k = 0; k < op.size; ++k) {
    e[k] = 1.0;
    m.col(k) = op.apply(e);
    e[k] = 0.0;
  }
  return m;
}

namespace {

/// Orthonormal (Helmert) basis of the mean-zero subspace of R^n.
Eigen::MatrixXd mean_zero_basis(Eigen::Index n) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n - 1);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double norm = std::sqrt(double(k) * double(k + 1));
    q.col(k - 1).head(k).setConstant(1.0 / norm);
    q(k, k - 1) = -double(k) / norm;
  }
  return q;
}

}  // namespace

double smallest_singular_value(const LinearOperator& op, bool restrict_f_mean_zero) {
  Eigen::MatrixXd m = assemble_dense(op);
  const bool has_f_block = op.tag == OperatorTag::sys1_f || op.tag == OperatorTag::sys2_coupled;
  if (restrict_f_mean_zero && has_f_block && op.grid) {
    const auto n = Eigen::Index(op.grid->size());
    const Eigen::MatrixXd q = mean_zero_basis(n);
    Eigen::MatrixXd restricted(m.rows(), m.cols() - 1);
    restricted.leftCols(n - 1) = m.leftCols(n) * q;
    if (m.cols() > n) restricted.rightCols(m.cols() - n) = m.rightCols(m.cols() - n);
    m = std::move(restricted);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().minCoeff();
}

int numerical_kernel_dimension(const LinearOperator& op, double rel_tol) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(assemble_dense(op));
  const auto& sv = svd.singularValues();
  const double cut = rel_tol * sv.maxCoeff();
  return int((sv.array() < cut).count());
}

ScalarField ellipticity_check(const MetricState& state, const VortexParams& p, double s) {
  const double sh = p.shift();
  const double shift2 = 1.0 + 2.0 * sh;
  const ScalarField phi = s * state.phig2();
  const ScalarField c1 = phi + (2 * p.r2 + sh * (4 * p.r2 + 2));
  const ScalarField c2 = (2 * p.r2 + 2 + sh * (4 * p.r2 + 2)) - phi;
  const ScalarField a11 =
      c1 * (c2 * (2.0 * s * state.lap_f() + s * state.lap_psi() + shift2 * (2 * p.r1 + 1)) +
            s * state.gradient_density());
  const ScalarField a12 = c1 * (s * state.lap_f() + (p.r1 + sh * (2 * p.r1 + 1))) * c2;
  const ScalarField a21 = 4.0 * s * (state.phig2() - 1.0);
  const ScalarField a22 = 2.0 * s * (state.phig2() - 1.0) + shift2 * (4 * p.r2 + 2);
  return a11 * a22 - a12 * a21;
}

ScalarField random_smooth_field(const GridPtr& grid, std::mt19937_64& rng, int max_mode) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(grid->size());
  const double two_pi = 2.0 * std::numbers::pi;
  for (int kx = -max_mode; kx <= max_mode; ++kx)
    for (int ky = 0; ky <= max_mode; ++ky) {
      if (ky == 0 && kx < 0) continue;
      const double a = normal(rng), b = normal(rng);
      for (int i = 0; i < grid->n(); ++i)
        for (int j = 0; j < grid->n(); ++j) {
          const double ph = two_pi * (kx * grid->x(i) + ky * grid->y(j));
          v[grid->index(i, j)] += a * std::cos(ph) + b * std::sin(ph);
        }
    }
  v /= v.abs().maxCoeff();
  return ScalarField(grid, std::move(v));
}

double fd_check(const MetricState& state, const VortexParams& p, OperatorTag tag, int n_probes, std::uint64_t seed,
                double s, double step) {
  const GridPtr grid = state.grid();
  const auto n = Eigen::Index(grid->size());
  const LinearOperator op = linearize(state, p, tag, s);
  std::mt19937_64 rng(seed);

  auto residual = [&](const ScalarField& f, const ScalarField& psi) -> Eigen::VectorXd {
    const MetricState st(f, psi, state.section_ptr());
    switch (tag) {
      case OperatorTag::sys1_psi: return residual_sys1_psi(st, p).values().matrix();
      case OperatorTag::s_path: return residual_t0_homotopy(st, p, s).values().matrix();
      case OperatorTag::sys1_f: return determinant_lhs(st, p).values().matrix();
      case OperatorTag::sys2_coupled: {
        Eigen::VectorXd out(2 * n);
        out.head(n) = determinant_lhs(st, p).values().matrix();
        out.tail(n) = residual_sys2_psi(st, p).values().matrix();
        return out;
      }
    }
    return {};
  };

  double worst = 0.0;
  for (int probe = 0; probe < n_probes; ++probe) {
    ScalarField df(grid, 0.0), dpsi(grid, 0.0);
    if (tag == OperatorTag::sys1_f || tag == OperatorTag::sys2_coupled) df = random_smooth_field(grid, rng);
    if (tag != OperatorTag::sys1_f) dpsi = random_smooth_field(grid, rng);

    Eigen::VectorXd v;
    if (tag == OperatorTag::sys2_coupled) {
      v.resize(2 * n);
      v.head(n) = df.values().matrix();
      v.tail(n) = dpsi.values().matrix();
    } else {
      v = (tag == OperatorTag::sys1_f ? df : dpsi).values().matrix();
    }
    const Eigen::VectorXd jv = op.apply(v);
    const Eigen::VectorXd fd = (residual(state.f() + step * df, state.psi() + step * dpsi) -
                                residual(state.f() - step * df, state.psi() - step * dpsi)) /
                               (2.0 * step);
    const double scale = std::max(jv.cwiseAbs().maxCoeff(), 1e-300);
    worst = std::max(worst, (jv - fd).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

GmresResult gmres(const LinearOperator& op, const Eigen::VectorXd& b, double rel_tol, int max_iterations,
                  int restart) {
  const Eigen::Index n = op.size;
  GmresResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return res;
  auto precond = [&](const Eigen::VectorXd& v) { return op.precondition ? op.precondition(v) : v; };

  Eigen::VectorXd r = b;
  int total = 0;
  while (total < max_iterations) {
    const double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rel_tol) break;
    const int m = std::min(restart, max_iterations - total);
    Eigen::MatrixXd v(n, m + 1);
    Eigen::MatrixXd z(n, m);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g[0] = beta;
    v.col(0) = r / beta;
    int k = 0;
    for (; k < m; ++k) {
      z.col(k) = precond(v.col(k));
      Eigen::VectorXd w = op.apply(z.col(k));
      for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt
        h(i, k) = v.col(i).dot(w);
        w -= h(i, k) * v.col(i);
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 0) v.col(k + 1) = w / h(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double tmp = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = tmp;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = denom > 0 ? h(k, k) / denom : 1.0;
      sn[k] = denom > 0 ? h(k + 1, k) / denom : 0.0;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++total;
      if (std::abs(g[k + 1]) / bnorm <= rel_tol || h(k, k) == 0.0) {
        ++k;
        break;
      }
    }
    // Back substitution on the k x k upper-triangular system.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double acc = g[i];
      for (int j = i + 1; j < k; ++j) acc -= h(i, j) * y[j];
      y[i] = h(i, i) != 0.0 ? acc / h(i, i) : 0.0;
    }
    const Eigen::VectorXd x_new = res.x + z.leftCols(k) * y;
    const Eigen::VectorXd r_new = b - op.apply(x_new);
    if (!(r_new.norm() < r.norm())) break;  // a cycle that does not help is discarded
    const bool stalled = r_new.norm() >= 0.999 * r.norm();
    res.x = x_new;
    r = r_new;
    res.relative_residual = r.norm() / bnorm;
    if (stalled) break;
  }
  res.iterations = total;
  return res;
}

}  // namespace vortex

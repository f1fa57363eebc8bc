#pragma once

// Linearizations of the reduced residuals, dense assembly for oracles, the
// ellipticity determinant and finite-difference verification.

#include "vortex/geometry.hpp"
#include "vortex/vortex_model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace vortex {

enum class OperatorTag { sys1_psi, sys1_f, sys2_coupled, s_path };

std::string_view to_string(OperatorTag tag);

/// Matrix-free operator on nodal vectors. Coupled operators act on [df; dpsi].
struct LinearOperator {
  using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  OperatorTag tag = OperatorTag::sys1_psi;
  GridPtr grid;  ///< null for operators not attached to a grid
  Eigen::Index size = 0;
  Map apply;
  /// Approximate inverse used as a right preconditioner; exact on the range
  /// for sys1_f.
  Map precondition;
};

/// Exact derivative of the residual selected by tag:
///   sys1_psi      d residual_sys1_psi / d psi
///   sys1_f        d (determinant_lhs - a0) / d f = A Delta df
///   sys2_coupled  d residual_sys2 / d (f, psi)
///   s_path        d residual_t0_homotopy / d psi at homotopy parameter s
LinearOperator linearize(const MetricState& state, const VortexParams& params, OperatorTag tag,
                         double s = 1.0);

/// Coefficient A of the decoupled determinant linearization A Delta df.
ScalarField sys1_f_coefficient(const MetricState& state, const VortexParams& params);

inline constexpr int kDenseMaxN = 24;

/// Column k is apply(e_k). Throws SizeError if grid n > 24.
Eigen::MatrixXd assemble_dense(const LinearOperator& op);

/// Smallest singular value of the dense matrix; with restrict_f_mean_zero the
/// f block is restricted to mean-zero perturbations (an orthonormal basis of
/// that subspace), yielding a tall matrix for the coupled operator.
double smallest_singular_value(const LinearOperator& op, bool restrict_f_mean_zero);

/// Number of singular values below rel_tol times the largest.
int numerical_kernel_dimension(const LinearOperator& op, double rel_tol = 1e-10);

/// Pointwise det of the principal symbol matrix of the coupled homotopy T^s.
ScalarField ellipticity_check(const MetricState& state, const VortexParams& params, double s);

/// Random smooth field: Fourier modes |k| <= max_mode with unit-scale
/// Gaussian coefficients.
ScalarField random_smooth_field(const GridPtr& grid, std::mt19937_64& rng, int max_mode = 4);

/// max over probes of |J v - centered FD| / |J v| (sup norms).
/// The frozen a0 cancels in the difference, so the determinant residual is
/// differenced through determinant_lhs.
double fd_check(const MetricState& state, const VortexParams& params, OperatorTag tag, int n_probes,
                std::uint64_t seed = 0, double s = 1.0, double step = 1e-6);

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Restarted, right-preconditioned GMRES for op x = b.
GmresResult gmres(const LinearOperator& op, const Eigen::VectorXd& b, double rel_tol = 1e-12,
                  int max_iterations = 400, int restart = 80);

}  // namespace vortex

#pragma once

// Flat square torus C/(Z + iZ) carrying a degree-d line bundle, discretized on
// an n x n periodic grid over the fundamental domain [0,1)^2.
//
// Normalization: the Kahler form is omega = 2*pi*d dx^dy, so the total area
// is 2*pi*d and the Laplacian Delta u = (i ddbar u) / omega equals the
// Euclidean Laplacian divided by 4*pi*d.

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace vortex {

inline constexpr double kDefaultCompatTol = 1e-8;

class TorusGrid;
using GridPtr = std::shared_ptr<const TorusGrid>;

class TorusGrid {
 public:
  using Spectrum = std::vector<std::complex<double>>;

  /// n must be even and >= 2 (the solver front-ends enforce n >= 16).
  static GridPtr create(int n, int deg_l = 1);

  ~TorusGrid();
  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;

  int n() const noexcept { return n_; }
  int deg_l() const noexcept { return deg_l_; }
  double spacing() const noexcept { return 1.0 / n_; }
  double total_area() const noexcept;
  double node_weight() const noexcept { return total_area() / (double(n_) * n_); }
  std::size_t size() const noexcept { return std::size_t(n_) * n_; }

  /// Row-major node index with periodic wrap in both directions.
  std::size_t index(int i, int j) const noexcept;
  double x(int i) const noexcept { return i * spacing(); }
  double y(int j) const noexcept { return j * spacing(); }

  // Half-complex spectral layout (n rows, n/2+1 columns); unnormalized DFT.
  std::size_t spectrum_cols() const noexcept { return std::size_t(n_ / 2 + 1); }
  std::size_t spectrum_size() const noexcept { return std::size_t(n_) * spectrum_cols(); }
  /// Signed wavenumber of spectral row i (x direction).
  int wavenumber(int i) const noexcept { return i <= n_ / 2 ? i : i - n_; }
  /// Eigenvalue of Delta on the Fourier mode stored at (i, j); always <= 0.
  double mode_eigenvalue(int i, int j) const noexcept;

  Spectrum forward(const Eigen::ArrayXd& values) const;
  /// Inverse transform including the 1/n^2 normalization.
  Eigen::ArrayXd inverse(const Spectrum& spectrum) const;

 private:
  TorusGrid(int n, int deg_l);
  struct Plans;

  int n_;
  int deg_l_;
  std::unique_ptr<Plans> plans_;
};

/// Real grid function. Value semantics; the grid is shared and immutable.
class ScalarField {
 public:
  ScalarField(GridPtr grid, double value = 0.0);
  ScalarField(GridPtr grid, Eigen::ArrayXd values);

  template <typename F>
  static ScalarField from_function(const GridPtr& grid, F&& f) {
    Eigen::ArrayXd v(grid->size());
    for (int i = 0; i < grid->n(); ++i)
      for (int j = 0; j < grid->n(); ++j) v[grid->index(i, j)] = f(grid->x(i), grid->y(j));
    return ScalarField(grid, std::move(v));
  }

  const TorusGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const Eigen::ArrayXd& values() const noexcept { return values_; }
  Eigen::ArrayXd& values() noexcept { return values_; }

  double operator()(int i, int j) const noexcept { return values_[grid_->index(i, j)]; }

  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }
  double sup_norm() const { return values_.abs().maxCoeff(); }
  bool all_finite() const { return values_.isFinite().all(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(const ScalarField& o);
  ScalarField& operator+=(double c) { values_ += c; return *this; }
  ScalarField& operator-=(double c) { values_ -= c; return *this; }
  ScalarField& operator*=(double c) { values_ *= c; return *this; }
  ScalarField& operator/=(double c) { values_ /= c; return *this; }

  ScalarField operator-() const { return ScalarField(grid_, -values_); }

 private:
  void require_same_grid(const ScalarField& o) const;

  GridPtr grid_;
  Eigen::ArrayXd values_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
inline ScalarField operator+(ScalarField a, double c) { return a += c; }
inline ScalarField operator+(double c, ScalarField a) { return a += c; }
inline ScalarField operator-(ScalarField a, double c) { return a -= c; }
inline ScalarField operator-(double c, const ScalarField& a) { return (-a) += c; }
inline ScalarField operator*(ScalarField a, double c) { return a *= c; }
inline ScalarField operator*(double c, ScalarField a) { return a *= c; }
inline ScalarField operator/(ScalarField a, double c) { return a /= c; }

/// Sup-norm of a - b.
double sup_distance(const ScalarField& a, const ScalarField& b);

ScalarField laplacian(const ScalarField& u);

/// Sum over nodes of u times the node weight 2*pi*d/n^2.
double integrate(const ScalarField& u);

/// integrate(u) / total_area, i.e. the arithmetic node mean.
double omega_mean(const ScalarField& u);

/// Solves Delta u = rhs - mean(rhs) with mean(u) = target_mean.
/// Throws CompatibilityError when |mean(rhs)| > compat_tol.
ScalarField poisson_solve(const ScalarField& rhs, double target_mean,
                          double compat_tol = kDefaultCompatTol);

/// Applies the Fourier multiplier symbol(lambda) mode by mode, where lambda is
/// the Delta eigenvalue of the mode.
ScalarField spectral_multiply(const ScalarField& u, const std::function<double(double)>& symbol);

/// Mean-zero Green kernel sampled at grid offsets: G(x_i - 0).
ScalarField green_kernel(const GridPtr& grid);

/// f(x) = integral of G(x, y) rhs(y) omega(y) evaluated by direct periodic
/// convolution with green_kernel. Same compatibility contract as poisson_solve.
ScalarField green_solve(const ScalarField& rhs, double compat_tol = kDefaultCompatTol);

/// Spectral interpolation/restriction onto another grid of the same degree.
/// Nyquist modes are dropped.
ScalarField resample(const ScalarField& u, const GridPtr& target);

/// |phi|_k^2 for the holomorphic section phi, rescaled so that max = 1/2.
struct SectionData {
  ScalarField phik2;
  double rescale_factor = 1.0;
  int theta_terms = 0;  ///< 0 for synthetic sections
};

using SectionPtr = std::shared_ptr<const SectionData>;

/// Theta-function section of the degree-1 bundle: |phi|_k^2 = c |theta(z)|^2
/// exp(-2 pi y^2), theta(z) = sum exp(-pi m^2) exp(2 pi i m z).
/// Throws TruncationError when tail_tol is below the summation round-off floor.
SectionData build_theta_section(const GridPtr& grid, double tail_tol = 1e-15);

/// phi = 0 (degenerate test mode).
SectionData zero_section(const GridPtr& grid);

/// Synthetic constant |phi|_k^2, used by analytic tests.
SectionData constant_section(const GridPtr& grid, double value);

/// Self-test of a theta section: max over nodes with |phi|_k^2 > floor of
/// |-Delta log|phi|_k^2 - 1|, evaluated with a fourth-order centered stencil on
/// the extended-precision theta series.
double section_curvature_defect(const SectionData& section, double floor = 1e-3);

}  // namespace vortex

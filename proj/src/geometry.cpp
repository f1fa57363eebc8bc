#include "vortex/geometry.hpp"

#include "vortex/errors.hpp"
#include "vortex/theta.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

namespace vortex {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

struct TorusGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  Plans(int n) {
    std::lock_guard lock(planner_mutex());
    const std::size_t real_size = std::size_t(n) * n;
    const std::size_t cplx_size = std::size_t(n) * (n / 2 + 1);
    std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(real_size));
    std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(cplx_size));
    r2c = fftw_plan_dft_r2c_2d(n, n, in.get(), out.get(), FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_2d(n, n, out.get(), in.get(), FFTW_ESTIMATE);
  }

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
  }
};

GridPtr TorusGrid::create(int n, int deg_l) {
  if (n < 2 || n % 2 != 0)
    throw SizeError("grid size must be a positive even integer, got " + std::to_string(n));
  if (deg_l < 1) throw SizeError("line bundle degree must be positive");
  return GridPtr(new TorusGrid(n, deg_l));
}

TorusGrid::TorusGrid(int n, int deg_l) : n_(n), deg_l_(deg_l), plans_(std::make_unique<Plans>(n)) {}

TorusGrid::~TorusGrid() = default;

double TorusGrid::total_area() const noexcept { return 2.0 * std::numbers::pi * deg_l_; }

std::size_t TorusGrid::index(int i, int j) const noexcept {
  i %= n_;
  j %= n_;
  if (i < 0) i += n_;
  if (j < 0) j += n_;
  return std::size_t(i) * n_ + j;
}

double TorusGrid::mode_eigenvalue(int i, int j) const noexcept {
  const double kx = wavenumber(i);
  const double ky = j;
  return -std::numbers::pi * (kx * kx + ky * ky) / deg_l_;
}

TorusGrid::Spectrum TorusGrid::forward(const Eigen::ArrayXd& values) const {
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(size()));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(spectrum_size()));
  std::memcpy(in.get(), values.data(), size() * sizeof(double));
  fftw_execute_dft_r2c(plans_->r2c, in.get(), out.get());
  Spectrum s(spectrum_size());
  std::memcpy(reinterpret_cast<void*>(s.data()), out.get(), spectrum_size() * sizeof(fftw_complex));
  return s;
}

Eigen::ArrayXd TorusGrid::inverse(const Spectrum& spectrum) const {
  std::unique_ptr<fftw_complex, FftwDeleter> in(fftw_alloc_complex(spectrum_size()));
  std::unique_ptr<double, FftwDeleter> out(fftw_alloc_real(size()));
  std::memcpy(in.get(), spectrum.data(), spectrum_size() * sizeof(fftw_complex));
  fftw_execute_dft_c2r(plans_->c2r, in.get(), out.get());
  Eigen::ArrayXd v(size());
  const double scale = 1.0 / double(size());
  for (std::size_t k = 0; k < size(); ++k) v[Eigen::Index(k)] = out.get()[k] * scale;
  return v;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridPtr grid, double value)
    : grid_(std::move(grid)), values_(Eigen::ArrayXd::Constant(grid_->size(), value)) {}

ScalarField::ScalarField(GridPtr grid, Eigen::ArrayXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != Eigen::Index(grid_->size()))
    throw GridMismatch("field value count does not match grid size");
}

void ScalarField::require_same_grid(const ScalarField& o) const {
  if (grid_ != o.grid_ &&
      (grid_->n() != o.grid_->n() || grid_->deg_l() != o.grid_->deg_l()))
    throw GridMismatch("fields live on different grids");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(o);
  values_ += o.values_;
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(o);
  values_ -= o.values_;
  return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& o) {
  require_same_grid(o);
  values_ *= o.values_;
  return *this;
}

double sup_distance(const ScalarField& a, const ScalarField& b) { return (a - b).sup_norm(); }

// ---------------------------------------------------------------------------

ScalarField spectral_multiply(const ScalarField& u, const std::function<double(double)>& symbol) {
  const TorusGrid& g = u.grid();
  auto s = g.forward(u.values());
  const std::size_t cols = g.spectrum_cols();
  for (int i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < cols; ++j) s[i * cols + j] *= symbol(g.mode_eigenvalue(i, int(j)));
  return ScalarField(u.grid_ptr(), g.inverse(s));
}

ScalarField laplacian(const ScalarField& u) {
  return spectral_multiply(u, [](double lambda) { return lambda; });
}

double integrate(const ScalarField& u) { return u.values().sum() * u.grid().node_weight(); }

double omega_mean(const ScalarField& u) { return u.values().mean(); }

namespace {

void require_compatible(const ScalarField& rhs, double compat_tol) {
  const double m = omega_mean(rhs);
  if (!(std::abs(m) <= compat_tol))
    throw CompatibilityError("right-hand side has mean " + std::to_string(m) +
                             ", exceeding compatibility tolerance " + std::to_string(compat_tol));
}

}  // namespace

ScalarField poisson_solve(const ScalarField& rhs, double target_mean, double compat_tol) {
  require_compatible(rhs, compat_tol);
  ScalarField u = spectral_multiply(rhs, [](double lambda) { return lambda < 0 ? 1.0 / lambda : 0.0; });
  u += target_mean - omega_mean(u);
  return u;
}

ScalarField green_kernel(const GridPtr& grid) {
  // G(p, q) = (1/A) sum_{k != 0} cos(2 pi (kx p + ky q)/n) / lambda_k, summed
  // over the discrete band kx, ky in [-n/2, n/2). Separated into
  // C W C^T - S W S^T with C, S the cosine and sine tables.
  const int n = grid->n();
  const double a = 2.0 * std::numbers::pi / n;
  Eigen::MatrixXd c(n, n), s(n, n), w(n, n);
  for (int p = 0; p < n; ++p)
    for (int kk = 0; kk < n; ++kk) {
      const int k = kk - n / 2;
      c(p, kk) = std::cos(a * k * p);
      s(p, kk) = std::sin(a * k * p);
    }
  for (int kx = 0; kx < n; ++kx)
    for (int ky = 0; ky < n; ++ky) {
      const double fx = kx - n / 2;
      const double fy = ky - n / 2;
      const double lambda = -std::numbers::pi * (fx * fx + fy * fy) / grid->deg_l();
      w(kx, ky) = lambda < 0 ? 1.0 / lambda : 0.0;
    }
  const Eigen::MatrixXd k = (c * w * c.transpose() - s * w * s.transpose()) / grid->total_area();
  Eigen::ArrayXd v(grid->size());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) v[grid->index(p, q)] = k(p, q);
  return ScalarField(grid, std::move(v));
}

ScalarField green_solve(const ScalarField& rhs, double compat_tol) {
  require_compatible(rhs, compat_tol);
  const GridPtr& grid = rhs.grid_ptr();
  const int n = grid->n();
  const ScalarField kernel = green_kernel(grid);
  const Eigen::ArrayXd centered = rhs.values() - omega_mean(rhs);
  const double w = grid->node_weight();
  Eigen::ArrayXd out(grid->size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < n; ++p) {
        const int dp = (i - p + n) % n;
        for (int q = 0; q < n; ++q) acc += kernel(dp, j - q) * centered[Eigen::Index(p) * n + q];
      }
      out[grid->index(i, j)] = acc * w;
    }
  return ScalarField(grid, std::move(out));
}

ScalarField resample(const ScalarField& u, const GridPtr& target) {
  const TorusGrid& src = u.grid();
  if (src.deg_l() != target->deg_l()) throw GridMismatch("resample across different degrees");
  const auto s = src.forward(u.values());
  TorusGrid::Spectrum out(target->spectrum_size(), {0.0, 0.0});
  const int half = std::min(src.n(), target->n()) / 2;
  const double scale = double(target->size()) / double(src.size());
  for (int i = 0; i < src.n(); ++i) {
    const int kx = src.wavenumber(i);
    if (std::abs(kx) >= half) continue;
    const int ti = kx >= 0 ? kx : kx + target->n();
    for (int j = 0; j < half; ++j)
      out[std::size_t(ti) * target->spectrum_cols() + j] = s[std::size_t(i) * src.spectrum_cols() + j] * scale;
  }
  return ScalarField(target, target->inverse(out));
}

// ---------------------------------------------------------------------------

SectionData build_theta_section(const GridPtr& grid, double tail_tol) {
  if (grid->deg_l() != 1)
    throw SizeError("theta section is only available for degree-1 bundles");
  const int terms = theta::terms_for_tolerance(tail_tol);
  ScalarField raw = ScalarField::from_function(
      grid, [terms](double x, double y) { return theta::weighted_norm2<double>(x, y, terms); });
  const double c = 0.5 / raw.max();
  raw *= c;
  return SectionData{std::move(raw), c, terms};
}

SectionData zero_section(const GridPtr& grid) { return SectionData{ScalarField(grid, 0.0), 1.0, 0}; }

SectionData constant_section(const GridPtr& grid, double value) {
  return SectionData{ScalarField(grid, value), 1.0, 0};
}

double section_curvature_defect(const SectionData& section, double floor) {
  using Real = long double;
  if (section.theta_terms <= 0) throw SizeError("curvature self-test requires a theta section");
  const TorusGrid& g = section.phik2.grid();
  const int terms = section.theta_terms + 2;
  const Real c = section.rescale_factor;
  const Real four_pi_d = 4 * std::numbers::pi_v<Real> * g.deg_l();
  auto log_norm = [&](Real x, Real y) { return std::log(c * theta::weighted_norm2<Real>(x, y, terms)); };
  // The single zero of theta(z, i) sits at (1/2, 1/2) in the fundamental domain.
  auto zero_distance = [](Real x, Real y) {
    Real dx = std::abs(x - Real(0.5)), dy = std::abs(y - Real(0.5));
    dx = std::min(dx, 1 - dx);
    dy = std::min(dy, 1 - dy);
    return std::sqrt(dx * dx + dy * dy);
  };
  double defect = 0.0;
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j) {
      if (section.phik2(i, j) <= floor) continue;
      const Real x = g.x(i), y = g.y(j);
      const Real d = std::min(Real(1e-3), Real(0.01) * zero_distance(x, y));
      const Real u0 = log_norm(x, y);
      auto second = [&](Real um2, Real um1, Real up1, Real up2) {
        return (-um2 + 16 * um1 - 30 * u0 + 16 * up1 - up2) / (12 * d * d);
      };
      const Real lap = second(log_norm(x - 2 * d, y), log_norm(x - d, y), log_norm(x + d, y),
                              log_norm(x + 2 * d, y)) +
                       second(log_norm(x, y - 2 * d), log_norm(x, y - d), log_norm(x, y + d),
                              log_norm(x, y + 2 * d));
      defect = std::max(defect, double(std::abs(-lap / four_pi_d - 1)));
    }
  return defect;
}

namespace theta {

int terms_for_tolerance(double tail_tol) {
  // Round-off floor of the partial sum: eps times the sum of |terms| at y = 0.
  const double eps = std::numeric_limits<double>::epsilon();
  double mass = 1.0;
  for (int m = 1; m < 10; ++m) mass += 2.0 * std::exp(-std::numbers::pi * m * m);
  const double floor = 0.5 * eps * mass;
  if (!(tail_tol >= floor))
    throw TruncationError("requested theta tail " + std::to_string(tail_tol) +
                          " is below the double-precision floor " + std::to_string(floor));
  // Worst case over Im z in [-1/4, 5/4]: |term_m| <= exp(-pi m^2 + 2.5 pi |m|).
  for (int terms = 1; terms <= 64; ++terms) {
    double tail = 0.0;
    for (int m = terms + 1; m <= terms + 40; ++m)
      tail += 2.0 * std::exp(-std::numbers::pi * m * m + 2.5 * std::numbers::pi * m);
    if (tail < tail_tol) return terms;
  }
  throw TruncationError("theta series did not reach the requested tail within 64 terms");
}

}  // namespace theta

}  // namespace vortex

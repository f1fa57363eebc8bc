#pragma once

#include <stdexcept>
#include <string>

namespace vortex {

/// Base class of every failure raised by the solver. `kind()` is the stable
/// machine-readable name written into failure records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define VORTEX_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

VORTEX_DEFINE_ERROR(CompatibilityError)
VORTEX_DEFINE_ERROR(TruncationError)
VORTEX_DEFINE_ERROR(NegativityError)
VORTEX_DEFINE_ERROR(PositivityError)
VORTEX_DEFINE_ERROR(CalibrationError)
VORTEX_DEFINE_ERROR(SizeError)
VORTEX_DEFINE_ERROR(NoConvergence)
VORTEX_DEFINE_ERROR(SingularJacobian)
VORTEX_DEFINE_ERROR(BranchLost)
VORTEX_DEFINE_ERROR(EllipticityLost)
VORTEX_DEFINE_ERROR(BoundViolation)
VORTEX_DEFINE_ERROR(NotPositive)
VORTEX_DEFINE_ERROR(NoRealRoot)
VORTEX_DEFINE_ERROR(ConfigError)
VORTEX_DEFINE_ERROR(IncompatibleRuns)
VORTEX_DEFINE_ERROR(GridMismatch)

#undef VORTEX_DEFINE_ERROR

/// The continuation could not advance: the step fell below dt_min.
class PathStuck : public Error {
 public:
  PathStuck(const std::string& what, double last_good_t)
      : Error("PathStuck", what), last_good_t_(last_good_t) {}
  double last_good_t() const noexcept { return last_good_t_; }

 private:
  double last_good_t_;
};

/// Raised by the coupled path when the assumed lower bound on the
/// Laplacian of psi no longer holds; the caller recalibrates and restarts.
class EpsilonTooSmall : public Error {
 public:
  EpsilonTooSmall(const std::string& what, double observed_lap_psi_min)
      : Error("EpsilonTooSmall", what), observed_(observed_lap_psi_min) {}
  double observed_lap_psi_min() const noexcept { return observed_; }

 private:
  double observed_;
};

}  // namespace vortex

#pragma once

// Plain key = value run configuration.

#include "vortex/continuity.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vortex {

enum class SystemChoice { sys1, sys2, both };
enum class SectionKind { theta, zero };

struct RunConfig {
  SystemChoice system = SystemChoice::sys1;
  int n = 64;
  int r1 = 1;
  int r2 = 1;
  int deg_l = 1;
  std::optional<double> alpha;    ///< nullopt: calibrated
  std::optional<double> epsilon;  ///< nullopt: calibrated (sys2 only)
  double alpha_max = kDefaultAlphaMax;
  double epsilon_min = kDefaultEpsilonMin;
  int max_restarts = 8;
  SectionKind section = SectionKind::theta;
  std::string output_dir = "vortex_out";
  std::uint64_t seed = 0;
  int n_samples = 64;  ///< Griffiths directions per node
  std::vector<double> snapshot_times{0.0, 1.0};
  SolverConfig solver;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown or repeated keys
/// and invalid values raise ConfigError naming the line and key.
RunConfig parse_config(std::string_view text);

/// Reads and parses a file.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text of every key; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

std::string_view to_string(SystemChoice system);
std::string_view to_string(SectionKind section);
std::string_view to_string(Predictor predictor);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace vortex

#pragma once

// Run orchestration and result files.
//
// A run directory holds trace.csv, timings.csv, summary.json, config.txt and
// fields_{f,psi}_t<t>.csv. With system = both each system writes into its own
// subdirectory and the top-level summary.json indexes them.

#include "vortex/config.hpp"
#include "vortex/positivity.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace vortex {

inline constexpr int kSummarySchemaVersion = 1;

enum class RunMode { init, solve };

struct RunOptions {
  RunMode mode = RunMode::solve;
  bool quiet = false;
  std::ostream* log = nullptr;  ///< progress lines; ignored when quiet
};

/// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  ///< structured failure record written
inline constexpr int kExitUsage = 2;

/// Runs the configured systems into config.output_dir. Solver failures are
/// caught and written as failure records; the returned code is kExitOk iff
/// every system reached its target and all endpoint checks passed.
int run(const RunConfig& config, const RunOptions& options = {});

/// Re-checks the stored t = 1 endpoint of a run directory (residuals,
/// bounds, positivity) and writes verify.json there.
int verify(const std::filesystem::path& run_dir, const RunOptions& options = {});

/// Compares two single-system run directories that differ in epsilon or n
/// only. Throws IncompatibleRuns otherwise.
nlohmann::json export_comparison(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

/// export_comparison written to out/comparison.json; kExitOk iff every
/// reported check passed.
int compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
            const std::filesystem::path& out, const RunOptions& options = {});

/// n rows (x index) by n columns (y index), full precision.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field_csv(const std::filesystem::path& path, const GridPtr& grid);

/// Builds the configured section on a grid.
SectionPtr make_section(const RunConfig& config, const GridPtr& grid);

nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const PositivityReport& report);
nlohmann::json to_json(const BoundsReport& report);

}  // namespace vortex

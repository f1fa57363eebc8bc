#include "vortex/errors.hpp"
#include "vortex/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

vortex::RunConfig configure(const std::string& path, const std::string& out, const std::optional<std::uint64_t>& seed) {
  vortex::RunConfig cfg = path.empty() ? vortex::RunConfig{} : vortex::load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuity-path solver for the reduced vortex-bundle systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::string run_a, run_b;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "seed for sampled directions");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  };

  auto* init = app.add_subcommand("init", "solve t = 0 and calibrate only");
  add_common(init, true);
  auto* solve = app.add_subcommand("solve", "follow the path to t = 1");
  add_common(solve, true);
  auto* verify = app.add_subcommand("verify", "re-check a stored endpoint (directory given by --out)");
  add_common(verify, true);
  auto* compare = app.add_subcommand("compare", "epsilon or refinement comparison of two run directories");
  add_common(compare, false);
  compare->add_option("run_a", run_a, "first run directory")->required();
  compare->add_option("run_b", run_b, "second run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : vortex::kExitUsage;
  }

  vortex::RunOptions opts;
  opts.quiet = quiet;
  opts.log = &std::cerr;
  try {
    if (*init || *solve) {
      opts.mode = *init ? vortex::RunMode::init : vortex::RunMode::solve;
      return vortex::run(configure(config_path, out_dir, seed), opts);
    }
    if (*verify) {
      std::string dir = out_dir;
      if (dir.empty()) dir = configure(config_path, "", seed).output_dir;
      return vortex::verify(dir, opts);
    }
    return vortex::compare(run_a, run_b, out_dir.empty() ? "." : out_dir, opts);
  } catch (const vortex::ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << '\n';
    return vortex::kExitUsage;
  } catch (const vortex::Error& e) {
    std::cerr << e.kind() << ": " << e.what() << '\n';
    return vortex::kExitFailed;
  }
}

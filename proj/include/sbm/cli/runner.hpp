#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sbm/cli/config.hpp"
#include "sbm/cli/experiments.hpp"

namespace sbm::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitStatFail = 1,
  kExitUsage = 2,
  kExitBlowup = 3,
};

/// Environment variable that overrides output.root.
inline constexpr const char* kOutputRootEnv = "SBMLAB_OUTPUT_ROOT";

struct RenderedRun {
  bool pass = false;
  nlohmann::json report;
  /// (file name, contents) for the report, CSV tables and SVG plots.
  std::vector<std::pair<std::string, std::string>> files;
};

/// Runs the experiment and serialises its outputs without touching disk.
RenderedRun render_experiment(const Experiment& exp, const Config& effective);

struct RunOptions {
  bool smoke = false;
  /// key=value overrides applied last.
  std::vector<std::string> overrides;
};

/// Loads the config file (which must name an experiment) and merges defaults.
Config load_run_config(const std::filesystem::path& path, const RunOptions& opts,
                       const Experiment** exp_out);

std::filesystem::path output_root(const Config& effective);

/// Writes outputs and the manifest under `dir`; returns the manifest.
nlohmann::json write_run(const Experiment& exp, const Config& effective,
                         const RenderedRun& run, const std::filesystem::path& dir,
                         double wall_seconds);

int cmd_run(const std::filesystem::path& config, const RunOptions& opts,
            std::ostream& out, std::ostream& err);
int cmd_list(std::ostream& out);
int cmd_seed_check(const std::filesystem::path& config, const RunOptions& opts,
                   std::ostream& out, std::ostream& err);

/// Runs `fn`, mapping exceptions to exit codes and messages on `err`.
int guarded(std::ostream& err, const std::function<int()>& fn);

}  // namespace sbm::cli

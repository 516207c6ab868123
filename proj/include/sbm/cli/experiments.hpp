#pragma once

// Registry of runnable experiments. Each entry carries the statement it
// checks, a complete default configuration and the reduced settings used
// for quick determinism checks.

#include <functional>
#include <string>
#include <vector>

#include "sbm/cli/config.hpp"
#include "sbm/cli/report.hpp"

namespace sbm::cli {

struct Experiment {
  std::string name;
  /// The mathematical statement the experiment checks.
  std::string anchor;
  /// Config text listing every key the experiment reads.
  std::string defaults;
  /// Overrides that shrink replica counts and horizons.
  std::string smoke;
  std::function<ExperimentResult(const Config&)> run;
};

const std::vector<Experiment>& registry();

/// Throws ConfigError for unknown names.
const Experiment& find_experiment(const std::string& name);

/// defaults < file < smoke overrides (when requested) < explicit overrides.
/// Throws ConfigError for keys the experiment does not know.
Config effective_config(const Experiment& exp, const Config& file, bool smoke,
                        const Config& overrides = {});

}  // namespace sbm::cli

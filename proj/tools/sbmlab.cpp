// sbmlab: run registered experiments from config files.
//
//   sbmlab list
//   sbmlab run <config> [--smoke] [--set key=value ...]
//   sbmlab seed-check <config> [--smoke] [--set key=value ...]

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbm/cli/runner.hpp"

int main(int argc, char** argv) {
  using namespace sbm::cli;
  CLI::App app{"Symbiotic branching and parabolic Anderson experiments"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions opts;

  auto* run = app.add_subcommand("run", "Run the experiment named in a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_flag("--smoke", opts.smoke, "Use the reduced settings of the experiment");
  run->add_option("--set", opts.overrides, "Override a config key (key=value)");

  auto* check = app.add_subcommand("seed-check", "Run twice and compare all outputs");
  check->add_option("config", config_path, "Config file")->required();
  check->add_flag("--smoke", opts.smoke, "Use the reduced settings of the experiment");
  check->add_option("--set", opts.overrides, "Override a config key (key=value)");

  app.add_subcommand("list", "List experiments and the statements they check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  return guarded(std::cerr, [&]() -> int {
    if (*run) return cmd_run(config_path, opts, std::cout, std::cerr);
    if (*check) return cmd_seed_check(config_path, opts, std::cout, std::cerr);
    return cmd_list(std::cout);
  });
}

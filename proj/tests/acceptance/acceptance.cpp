// Acceptance runner: one PASS/FAIL line per criterion, each backed by the
// registry experiment at its default configuration.
//
//   sbm_acceptance            all criteria
//   sbm_acceptance 4 9        selected criteria

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "sbm/cli/experiments.hpp"
#include "sbm/cli/runner.hpp"

namespace {

using namespace sbm::cli;

struct Criterion {
  int id;
  const char* experiment;
  /// Wall-clock limit in seconds, when the criterion states one.
  std::optional<double> limit;
};

const std::vector<Criterion> kCriteria = {
    {1, "green-b2", 10.0},
    {2, "heat-qlimit", 30.0},
    {3, "heat-l1-collapse", 30.0},
    {4, "martingale", {}},
    {5, "pam-gbm", {}},
    {6, "selfduality", {}},
    {7, "comparison", {}},
    {8, "rho1-structure", {}},
    {9, "stepping-stone", {}},
    {10, "extinction-trend", {}},
    {11, "duality-functional", {}},
    {12, "particle-bridge", {}},
    {13, "reproducibility", {}},
};

std::string summary(const nlohmann::json& report) {
  std::string s;
  int shown = 0;
  for (const auto& e : report["estimates"]) {
    if (shown++ == 4) {
      s += " ...";
      break;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s=%.6g", s.empty() ? "" : " ",
                  e["name"].get<std::string>().c_str(), e["mean"].get<double>());
    s += buf;
  }
  return s;
}

bool run_criterion(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    const Experiment& exp = find_experiment(c.experiment);
    const RenderedRun run = render_experiment(exp, effective_config(exp, Config{}, false));
    pass = run.pass;
    detail = summary(run.report);
    for (const auto& n : run.report["notes"]) detail += " | " + n.get<std::string>();
  } catch (const std::exception& e) {
    detail = std::string("error: ") + e.what();
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.limit && wall >= *c.limit) {
    pass = false;
    detail += " | runtime over limit";
  }
  std::printf("criterion %2d %-20s %s (%.1fs) %s\n", c.id, c.experiment, pass ? "PASS" : "FAIL",
              wall, detail.c_str());
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    if (!run_criterion(c)) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}

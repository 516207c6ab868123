#include "sbm/cli/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <stdexcept>

#include "sbm/cli/svg.hpp"
#include "sbm/errors.hpp"

#ifndef SBM_VERSION
#define SBM_VERSION "0.0.0"
#endif

namespace sbm::cli {

namespace {

nlohmann::json params_json(const Config& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : c.entries()) j[k] = v;
  return j;
}

Config overrides_config(const std::vector<std::string>& items) {
  Config c;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + item + "': expected key=value");
    Config one = Config::parse(item, "--set");
    c.merge(one);
  }
  return c;
}

}  // namespace

RenderedRun render_experiment(const Experiment& exp, const Config& effective) {
  const ExperimentResult result = exp.run(effective);
  RenderedRun out;
  out.pass = result.pass;
  out.report = report_json(exp.name, params_json(effective), effective.uinteger("seed"), result);
  out.files.emplace_back("report.json", report_text(out.report));
  for (const auto& t : result.tables) out.files.emplace_back(t.name + ".csv", csv_text(t));
  if (effective.flag("output.svg"))
    for (const auto& p : result.plots) out.files.emplace_back(p.name + ".svg", render_svg(p));
  return out;
}

Config load_run_config(const std::filesystem::path& path, const RunOptions& opts,
                       const Experiment** exp_out) {
  const Config file = Config::load(path);
  if (!file.has("experiment")) throw ConfigError(path.string() + ": missing 'experiment' key");
  const Experiment& exp = find_experiment(file.str("experiment"));
  if (exp_out) *exp_out = &exp;
  return effective_config(exp, file, opts.smoke, overrides_config(opts.overrides));
}

std::filesystem::path output_root(const Config& effective) {
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  if (effective.has("output.root")) return effective.str("output.root");
  return "sbmlab-out";
}

nlohmann::json write_run(const Experiment& exp, const Config& effective, const RenderedRun& run,
                         const std::filesystem::path& dir, double wall_seconds) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [name, text] : run.files) {
    write_atomic(dir / name, text);
    files.push_back(name);
  }
  nlohmann::json manifest{
      {"experiment", exp.name},
      {"anchor", exp.anchor},
      {"config", effective.to_string()},
      {"version", SBM_VERSION},
      {"wall_seconds", wall_seconds},
      {"results", {{exp.name, run.pass ? "pass" : "fail"}}},
      {"files", files},
  };
  write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

int cmd_run(const std::filesystem::path& config, const RunOptions& opts, std::ostream& out,
            std::ostream& err) {
  (void)err;
  const Experiment* exp = nullptr;
  const Config eff = load_run_config(config, opts, &exp);
  const auto start = std::chrono::steady_clock::now();
  const RenderedRun run = render_experiment(*exp, eff);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto dir =
      output_root(eff) / (eff.has("output.dir") ? eff.str("output.dir") : exp->name);
  write_run(*exp, eff, run, dir, wall);
  out << exp->name << ": " << (run.pass ? "PASS" : "FAIL") << " (" << dir.string() << ")\n";
  for (const auto& note : run.report["notes"]) out << "  note: " << note.get<std::string>() << "\n";
  return run.pass ? kExitPass : kExitStatFail;
}

int cmd_list(std::ostream& out) {
  for (const auto& e : registry()) out << e.name << " -> " << e.anchor << "\n";
  return kExitPass;
}

int cmd_seed_check(const std::filesystem::path& config, const RunOptions& opts,
                   std::ostream& out, std::ostream& err) {
  const Experiment* exp = nullptr;
  const Config eff = load_run_config(config, opts, &exp);
  const RenderedRun a = render_experiment(*exp, eff);
  const RenderedRun b = render_experiment(*exp, eff);
  bool same = a.files.size() == b.files.size();
  for (std::size_t k = 0; same && k < a.files.size(); ++k) {
    if (a.files[k] != b.files[k]) {
      err << "seed-check: " << a.files[k].first << " differs between runs\n";
      same = false;
    }
  }
  out << exp->name << ": seed-check " << (same ? "identical" : "DIFFERENT") << " ("
      << a.files.size() << " files)\n";
  return same ? kExitPass : kExitStatFail;
}

int guarded(std::ostream& err, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const NumericalBlowup& e) {
    err << "numerical blowup: " << e.what() << "\n";
    return kExitBlowup;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RecurrentWalkError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace sbm::cli

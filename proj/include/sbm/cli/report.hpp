#pragma once

// Experiment outputs: the JSON report, CSV tables and plot series, and the
// run manifest written after everything else.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbm/stats.hpp"

namespace sbm::cli {

struct NamedEstimate {
  std::string name;
  McEstimate value;
};

/// A deterministic scalar, reported with se = 0 and n = 1.
NamedEstimate exact_value(std::string name, double value);

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Series {
  std::string label;
  std::vector<double> x, y;
  /// Optional confidence band; empty or the same length as y.
  std::vector<double> lo, hi;
};

struct Plot {
  std::string name;  // file stem
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_x = false;
};

struct ExperimentResult {
  bool pass = false;
  std::vector<NamedEstimate> estimates;
  std::vector<std::string> notes;
  std::vector<Table> tables;
  std::vector<Plot> plots;
};

/// {experiment, params, seed, estimates: [{name, mean, se, ci, n}], pass, notes}
nlohmann::json report_json(const std::string& experiment, const nlohmann::json& params,
                           std::uint64_t seed, const ExperimentResult& result);

/// Serialised report with fixed formatting.
std::string report_text(const nlohmann::json& report);

/// CSV text; numbers in shortest round-trip form.
std::string csv_text(const Table& table);

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace sbm::cli

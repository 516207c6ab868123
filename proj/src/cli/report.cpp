#include "sbm/cli/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "sbm/errors.hpp"

namespace sbm::cli {

NamedEstimate exact_value(std::string name, double value) {
  McEstimate e;
  e.mean = value;
  e.n_replicas = 1;
  e.ci_low = e.ci_high = value;
  return {std::move(name), e};
}

namespace {

nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

nlohmann::json report_json(const std::string& experiment, const nlohmann::json& params,
                           std::uint64_t seed, const ExperimentResult& result) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : result.estimates)
    est.push_back({{"name", e.name},
                   {"mean", number(e.value.mean)},
                   {"se", number(e.value.std_error)},
                   {"ci", {number(e.value.ci_low), number(e.value.ci_high)}},
                   {"n", e.value.n_replicas}});
  return {{"experiment", experiment}, {"params", params}, {"seed", seed},
          {"estimates", est},         {"pass", result.pass}, {"notes", result.notes}};
}

std::string report_text(const nlohmann::json& report) { return report.dump(2) + "\n"; }

std::string csv_text(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out += ',';
    out += csv_escape(table.columns[j]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
    f << text;
    if (!f) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sbm::cli

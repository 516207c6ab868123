#pragma once

// Flat key-value configuration:
//
//   # comment
//   experiment = martingale
//   [model]
//   b = 1.0          -> key "model.b"
//
// Keys are unique after section prefixing; values are raw strings parsed on
// access.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbm/lattice.hpp"

namespace sbm::cli {

class Config {
 public:
  /// Throws ConfigError with `origin:line` on malformed input.
  static Config parse(std::string_view text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  /// Applies every entry of `other` on top of this one.
  void merge(const Config& other);

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t uinteger(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::optional<double> optional_num(const std::string& key) const;
  /// Comma- or whitespace-separated numbers.
  std::vector<double> num_list(const std::string& key) const;
  std::vector<std::string> str_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Canonical text form (sorted keys), used to echo configs.
  std::string to_string() const;

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

/// Parses a field specification on `geometry`:
///   zero
///   flat <theta>
///   points <coord>=<mass>, ...     coord is "x" or "x/y/..." (wraps)
///   sites <v0> <v1> ...            one value per site, row-major
Field parse_field(const std::string& spec, const GeometryPtr& geometry);

}  // namespace sbm::cli

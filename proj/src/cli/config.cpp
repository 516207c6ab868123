#include "sbm/cli/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sbm::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError(what + ": '" + s + "' is not a number");
  return v;
}

std::int64_t to_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && p == end) return v;
  // Accept integral values written in floating notation such as 1e4.
  const double d = to_double(s, what);
  if (d != static_cast<double>(static_cast<std::int64_t>(d)))
    throw ConfigError(what + ": '" + s + "' is not an integer");
  return static_cast<std::int64_t>(d);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ';' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ConfigError(where + ": malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
        throw ConfigError(where + ": invalid character in key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    cfg.values_[full] = value;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string Config::str(const std::string& key) const { return raw(key); }

double Config::num(const std::string& key) const { return to_double(raw(key), key); }

std::int64_t Config::integer(const std::string& key) const { return to_int(raw(key), key); }

std::uint64_t Config::uinteger(const std::string& key) const {
  const std::int64_t v = integer(key);
  if (v < 0) throw ConfigError(key + ": must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool Config::flag(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::optional<double> Config::optional_num(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  const std::string& v = raw(key);
  if (v.empty() || v == "none") return std::nullopt;
  return to_double(v, key);
}

std::vector<double> Config::num_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(raw(key))) out.push_back(to_double(s, key));
  return out;
}

std::vector<std::string> Config::str_list(const std::string& key) const {
  return split_list(raw(key));
}

std::string Config::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

Field parse_field(const std::string& spec, const GeometryPtr& geometry) {
  const std::string s = trim(spec);
  const auto sp = s.find_first_of(" \t");
  const std::string kind = s.substr(0, sp);
  const std::string rest = sp == std::string::npos ? std::string() : trim(s.substr(sp));
  const std::string what = "field '" + s + "'";
  if (kind == "zero") {
    if (!rest.empty()) throw ConfigError(what + ": 'zero' takes no arguments");
    return Field(geometry);
  }
  if (kind == "flat") return Field::constant(geometry, to_double(rest, what));
  if (kind == "sites") {
    const auto items = split_list(rest);
    if (static_cast<Index>(items.size()) != geometry->site_count())
      throw ConfigError(what + ": expected " + std::to_string(geometry->site_count()) +
                        " values");
    Field f(geometry);
    for (std::size_t i = 0; i < items.size(); ++i)
      f[static_cast<Index>(i)] = to_double(items[i], what);
    return f;
  }
  if (kind == "points") {
    Field f(geometry);
    for (const auto& item : split_list(rest)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError(what + ": expected coord=mass");
      std::vector<long> coords;
      std::string c = item.substr(0, eq);
      for (std::size_t pos = 0;;) {
        const auto slash = c.find('/', pos);
        coords.push_back(static_cast<long>(to_int(c.substr(pos, slash - pos), what)));
        if (slash == std::string::npos) break;
        pos = slash + 1;
      }
      if (static_cast<int>(coords.size()) != geometry->dim())
        throw ConfigError(what + ": coordinate '" + c + "' has wrong arity");
      f[geometry->site_of(coords)] += to_double(item.substr(eq + 1), what);
    }
    return f;
  }
  throw ConfigError(what + ": unknown kind '" + kind + "' (zero, flat, points, sites)");
}

}  // namespace sbm::cli

#pragma once

// Flat typed config files: TOML-compatible `[section]` headers with
// `key = value` entries. Values are integers, floats, booleans, quoted
// strings, or arrays of these. Errors name the offending section.key.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "graphon/errors.hpp"

namespace graphon {

struct ConfigValue {
  std::variant<std::int64_t, double, bool, std::string, std::vector<double>,
               std::vector<std::string>>
      v;

  bool is_number() const {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
  }
  double as_double() const {
    if (std::holds_alternative<std::int64_t>(v))
      return static_cast<double>(std::get<std::int64_t>(v));
    return std::get<double>(v);
  }
};

class Config {
 public:
  static Config parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path);
  }

  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    Config cfg;
    cfg.origin_ = origin;
    cfg.raw_ = text;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string t = strip(strip_comment(line));
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = strip(t.substr(1, t.size() - 2));
        if (section.empty())
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = strip(t.substr(0, eq));
      const std::string val = strip(t.substr(eq + 1));
      if (key.empty() || val.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
      cfg.values_[section + "." + key] = parse_value(val, origin, lineno);
    }
    return cfg;
  }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
  }

  std::int64_t get_int(const std::string& section, const std::string& key) const {
    const ConfigValue& cv = fetch(section, key);
    if (!std::holds_alternative<std::int64_t>(cv.v)) fail_type(section, key, "integer");
    return std::get<std::int64_t>(cv.v);
  }
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    const ConfigValue& cv = fetch(section, key);
    if (!cv.is_number()) fail_type(section, key, "number");
    return cv.as_double();
  }
  double get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  bool get_bool(const std::string& section, const std::string& key) const {
    const ConfigValue& cv = fetch(section, key);
    if (!std::holds_alternative<bool>(cv.v)) fail_type(section, key, "boolean");
    return std::get<bool>(cv.v);
  }
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    return has(section, key) ? get_bool(section, key) : fallback;
  }

  std::string get_string(const std::string& section, const std::string& key) const {
    const ConfigValue& cv = fetch(section, key);
    if (!std::holds_alternative<std::string>(cv.v)) fail_type(section, key, "string");
    return std::get<std::string>(cv.v);
  }
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
  }

  std::vector<double> get_double_array(const std::string& section, const std::string& key) const {
    const ConfigValue& cv = fetch(section, key);
    if (std::holds_alternative<std::vector<double>>(cv.v))
      return std::get<std::vector<double>>(cv.v);
    if (cv.is_number()) return {cv.as_double()};
    fail_type(section, key, "number array");
    return {};
  }

  std::vector<std::string> get_string_array(const std::string& section,
                                            const std::string& key) const {
    const ConfigValue& cv = fetch(section, key);
    if (std::holds_alternative<std::vector<std::string>>(cv.v))
      return std::get<std::vector<std::string>>(cv.v);
    if (std::holds_alternative<std::string>(cv.v)) return {std::get<std::string>(cv.v)};
    fail_type(section, key, "string array");
    return {};
  }

  const std::string& raw_text() const { return raw_; }

  // FNV-1a over the config bytes, reported in summaries
  std::string content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : raw_) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') in_string = !in_string;
      if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
  }

  static ConfigValue parse_scalar(const std::string& v, const std::string& origin, int lineno) {
    if (v == "true") return {true};
    if (v == "false") return {false};
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
      return {v.substr(1, v.size() - 2)};
    try {
      std::size_t pos = 0;
      if (v.find_first_of(".eE") == std::string::npos || (v.size() > 2 && v.rfind("0x", 0) == 0)) {
        const std::int64_t i = std::stoll(v, &pos, 0);
        if (pos == v.size()) return {i};
      }
      const double d = std::stod(v, &pos);
      if (pos == v.size()) return {d};
    } catch (const std::exception&) {
    }
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": cannot parse value `" + v + "`");
  }

  static ConfigValue parse_value(const std::string& v, const std::string& origin, int lineno) {
    if (v.front() != '[') return parse_scalar(v, origin, lineno);
    if (v.back() != ']')
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated array");
    const std::string body = strip(v.substr(1, v.size() - 2));
    std::vector<std::string> parts;
    std::string cur;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        parts.push_back(strip(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!strip(cur).empty()) parts.push_back(strip(cur));
    if (parts.empty()) return {std::vector<double>{}};
    if (parts.front().front() == '"') {
      std::vector<std::string> out;
      for (const std::string& p : parts) {
        const ConfigValue cv = parse_scalar(p, origin, lineno);
        if (!std::holds_alternative<std::string>(cv.v))
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": mixed array types");
        out.push_back(std::get<std::string>(cv.v));
      }
      return {out};
    }
    std::vector<double> out;
    for (const std::string& p : parts) {
      const ConfigValue cv = parse_scalar(p, origin, lineno);
      if (!cv.is_number())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": mixed array types");
      out.push_back(cv.as_double());
    }
    return {out};
  }

  const ConfigValue& fetch(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end())
      throw ConfigError(origin_ + ": missing required key `" + section + "." + key + "`");
    return it->second;
  }

  [[noreturn]] void fail_type(const std::string& section, const std::string& key,
                              const char* want) const {
    throw ConfigError(origin_ + ": key `" + section + "." + key + "` must be a " + want);
  }

  std::string origin_;
  std::string raw_;
  std::map<std::string, ConfigValue> values_;
};

}  // namespace graphon

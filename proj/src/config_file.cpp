#include "sdeh/config_file.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "sdeh/errors.hpp"

namespace sdeh {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool parse_number(const std::string& token, std::int64_t& as_int,
                  double& as_double, bool& is_int) {
  const std::string t = trim(token);
  if (t.empty()) return false;
  is_int = t.find_first_of(".eE") == std::string::npos;
  try {
    std::size_t used = 0;
    if (is_int) {
      as_int = std::stoll(t, &used);
      if (used != t.size()) return false;
      as_double = static_cast<double>(as_int);
    } else {
      as_double = std::stod(t, &used);
      if (used != t.size()) return false;
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

[[noreturn]] void fail(const std::string& origin, std::int64_t lineno,
                       const std::string& what) {
  std::ostringstream err;
  err << origin << ":" << lineno << ": " << what;
  throw ConfigError(err.str());
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text,
                                    const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::int64_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(origin, lineno, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(origin, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, lineno, "empty key");
    if (value.empty()) fail(origin, lineno, "empty value for key " + key);
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full_key)) {
      fail(origin, lineno, "duplicate key " + full_key);
    }

    if (value == "true" || value == "false") {
      cfg.values_[full_key] = (value == "true");
      continue;
    }
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        fail(origin, lineno, "unterminated string for key " + key);
      }
      cfg.values_[full_key] = value.substr(1, value.size() - 2);
      continue;
    }
    if (value.front() == '[') {
      if (value.back() != ']') fail(origin, lineno, "unterminated array for key " + key);
      const std::string body = trim(value.substr(1, value.size() - 2));
      std::vector<double> numbers;
      std::vector<std::string> strings;
      bool any_string = false;
      if (!body.empty()) {
        std::stringstream ss(body);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
          const std::string c = trim(cell);
          if (c.empty()) fail(origin, lineno, "empty array element for key " + key);
          if (c.front() == '"') {
            if (c.size() < 2 || c.back() != '"') {
              fail(origin, lineno, "bad string array element for key " + key);
            }
            strings.push_back(c.substr(1, c.size() - 2));
            any_string = true;
          } else {
            std::int64_t iv;
            double dv;
            bool is_int;
            if (!parse_number(c, iv, dv, is_int)) {
              fail(origin, lineno, "bad array element '" + c + "' for key " + key);
            }
            numbers.push_back(dv);
          }
        }
      }
      if (any_string && !numbers.empty()) {
        fail(origin, lineno, "mixed array types for key " + key);
      }
      if (any_string) {
        cfg.values_[full_key] = std::move(strings);
      } else {
        cfg.values_[full_key] = std::move(numbers);
      }
      continue;
    }
    {
      std::int64_t iv;
      double dv;
      bool is_int;
      if (!parse_number(value, iv, dv, is_int)) {
        fail(origin, lineno, "cannot parse value '" + value + "' for key " + key);
      }
      if (is_int) {
        cfg.values_[full_key] = iv;
      } else {
        cfg.values_[full_key] = dv;
      }
    }
  }
  return cfg;
}

const ConfigFile::Value& ConfigFile::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("missing config key: " + key + " (" + origin_ + ")");
  }
  return it->second;
}

bool ConfigFile::get_bool(const std::string& key) const {
  const auto& v = lookup(key);
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError("config key " + key + " is not a boolean");
}

std::int64_t ConfigFile::get_int(const std::string& key) const {
  const auto& v = lookup(key);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) {
    const auto as_int = static_cast<std::int64_t>(*d);
    if (static_cast<double>(as_int) == *d) return as_int;
  }
  throw ConfigError("config key " + key + " is not an integer");
}

double ConfigFile::get_double(const std::string& key) const {
  const auto& v = lookup(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError("config key " + key + " is not a number");
}

std::string ConfigFile::get_string(const std::string& key) const {
  const auto& v = lookup(key);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("config key " + key + " is not a string");
}

std::vector<double> ConfigFile::get_double_array(const std::string& key) const {
  const auto& v = lookup(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw ConfigError("config key " + key + " is not a numeric array");
}

std::vector<std::string> ConfigFile::get_string_array(
    const std::string& key) const {
  const auto& v = lookup(key);
  if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
  throw ConfigError("config key " + key + " is not a string array");
}

bool ConfigFile::get_bool_or(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}
std::int64_t ConfigFile::get_int_or(const std::string& key,
                                    std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}
double ConfigFile::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
std::string ConfigFile::get_string_or(const std::string& key,
                                      const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

}  // namespace sdeh

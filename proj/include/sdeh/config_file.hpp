#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace sdeh {

// Minimal declarative config reader: [section] / [section.sub] tables,
// key = value lines, # comments. Values: booleans, integers, floats,
// quoted strings, and flat arrays of numbers or strings. Keys are addressed
// as "section.key".
class ConfigFile {
 public:
  using Value = std::variant<bool, std::int64_t, double, std::string,
                             std::vector<double>, std::vector<std::string>>;

  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text,
                                 const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  bool get_bool(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;  // accepts integers
  std::string get_string(const std::string& key) const;
  std::vector<double> get_double_array(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  bool get_bool_or(const std::string& key, bool fallback) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const;

  const std::string& text() const { return text_; }

 private:
  const Value& lookup(const std::string& key) const;

  std::map<std::string, Value> values_;
  std::string origin_;
  std::string text_;
};

}  // namespace sdeh

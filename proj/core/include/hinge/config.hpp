#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hinge {

// key=value lines, '#' comments, blank lines ignored. Later assignments to a
// key overwrite the earlier value but keep its position, so a file round-trips
// in a stable order. Doubles as the run-manifest writer.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws ConfigError if absent
  std::string get_or(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;  // true/false/1/0/yes/no
  // Comma-separated values, trimmed, empty entries dropped.
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, int64_t value);
  void set_double(const std::string& key, double value);
  void set_bool(const std::string& key, bool value);

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }
  std::string to_string() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace hinge

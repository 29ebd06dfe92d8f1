#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sketcher {

// TOML-style key/value configuration: `key = value` lines, `#` comments,
// and `[section]` headers that prefix subsequent keys with `section.`.
// Values may be bare or double-quoted.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse_string(std::string_view text);
  static KvConfig parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace sketcher

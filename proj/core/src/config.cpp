#include "sketcher/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sketcher {

namespace {

std::string trim(std::string_view sv) {
  std::size_t begin = 0, end = sv.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(sv[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(sv[end - 1]))) --end;
  return std::string(sv.substr(begin, end - begin));
}

}  // namespace

KvConfig KvConfig::parse_string(std::string_view text) {
  KvConfig config;
  std::string section;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view raw = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    std::string line = trim(raw);
    if (!line.empty() && line[0] != '#') {
      if (line.front() == '[' && line.back() == ']') {
        section = trim(std::string_view(line).substr(1, line.size() - 2));
      } else {
        auto eq = line.find('=');
        if (eq == std::string::npos) {
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": expected key = value");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (auto hash = value.find(" #"); hash != std::string::npos && value[0] != '"') {
          value = trim(std::string_view(value).substr(0, hash));
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
          value = value.substr(1, value.size() - 2);
        }
        if (key.empty()) {
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": empty key");
        }
        if (!section.empty()) key = section + "." + key;
        config.values_[key] = value;
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return config;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

bool KvConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::optional<std::string> KvConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KvConfig::get_or(const std::string& key, std::string fallback) const {
  auto value = get(key);
  return value ? *value : std::move(fallback);
}

int KvConfig::get_int(const std::string& key, int fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  try {
    return std::stoi(*value);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' is not an integer: " + *value);
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  try {
    return std::stod(*value);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' is not a number: " + *value);
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1" || *value == "yes") return true;
  if (*value == "false" || *value == "0" || *value == "no") return false;
  throw std::runtime_error("config key '" + key + "' is not a boolean: " + *value);
}

}  // namespace sketcher

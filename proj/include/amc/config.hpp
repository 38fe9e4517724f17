#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "amc/engine.hpp"

namespace amc {

/// Malformed or invalid scenario configuration. `line` is 0 when the problem
/// is not tied to a specific line (missing file, cross-field validation).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, std::string key, const std::string& message);

  const std::string& source() const { return source_; }
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  std::string source_;
  int line_;
  std::string key_;
};

/// Line-oriented `key = value` text with `[section]` headers. `#` and `;`
/// start comments. Keys are addressed as "section.key".
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(std::istream& is, const std::string& source);

  const std::string& source() const { return source_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

ScenarioConfig scenario_from(const ConfigFile& file);
ScenarioConfig parse_scenario(std::istream& is, const std::string& source);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Effective configuration, every key spelled out; parsing it back yields an
/// identical ScenarioConfig.
std::string echo_scenario(const ScenarioConfig& config);

}  // namespace amc

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nophish::cli {

/// Resolves each setting from, in order: command-line flag, environment
/// variable, config file, built-in default. Every resolved value is recorded
/// with its origin so the run can print its effective configuration.
class Settings {
 public:
  /// Reads `key = value` lines; unknown keys are a ConfigError.
  void load_config(const std::filesystem::path& path);

  std::string resolve(const std::string& key, const std::optional<std::string>& flag, const std::string& fallback);
  double resolve_double(const std::string& key, const std::optional<double>& flag, double fallback);
  long long resolve_int(const std::string& key, const std::optional<long long>& flag, long long fallback);
  std::optional<std::string> resolve_optional(const std::string& key, const std::optional<std::string>& flag);

  void print(std::ostream& out) const;
  nlohmann::json to_json() const;

  static const std::vector<std::string>& known_keys();
  /// Environment variable consulted for `key`, if any.
  static std::optional<std::string> env_name(const std::string& key);

 private:
  struct Entry {
    std::string key;
    std::string value;
    std::string origin;
  };
  std::optional<std::pair<std::string, std::string>> lookup(const std::string& key,
                                                            const std::optional<std::string>& flag) const;
  void record(const std::string& key, const std::string& value, const std::string& origin);

  std::map<std::string, std::string> config_;
  std::string config_path_;
  std::vector<Entry> effective_;
};

}  // namespace nophish::cli

#include "settings.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

#include "nophish/config.hpp"
#include "nophish/error.hpp"

namespace nophish::cli {

namespace {

template <typename T>
T parse_as(const std::string& key, const std::string& value, const std::string& origin) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError("setting '" + key + "' from " + origin + ": '" + value + "' is not a valid number");
  }
  return out;
}

std::string format_double(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ec == std::errc() ? ptr : buffer);
}

}  // namespace

const std::vector<std::string>& Settings::known_keys() {
  static const std::vector<std::string> keys{
      "seed",      "data",        "format",        "columns",     "model",     "algo",
      "split",     "trees",       "m_try",         "max_depth",   "min_leaf",  "bootstrap",
      "k",         "lambda",      "epochs",        "threads",     "splits",    "seeds",
      "repeats",   "fixtures",    "rank_file",     "report_file", "index_file", "warn_threshold",
      "fail_override", "fetch_timeout_ms", "provider_timeout_ms", "port", "host", "origins",
      "corpus",    "data_dir",    "method",        "trained_on",  "mode",      "algos",
      "out",
  };
  return keys;
}

std::optional<std::string> Settings::env_name(const std::string& key) {
  static const std::map<std::string, std::string> names{
      {"port", "NOPHISH_PORT"},
      {"model", "NOPHISH_MODEL"},
      {"warn_threshold", "NOPHISH_POLICY_WARN"},
      {"fixtures", "NOPHISH_FIXTURES_DIR"},
      {"rank_file", "NOPHISH_RANK_FILE"},
      {"report_file", "NOPHISH_REPORT_FILE"},
      {"index_file", "NOPHISH_INDEX_FILE"},
      {"data_dir", "NOPHISH_DATA_DIR"},
  };
  if (auto it = names.find(key); it != names.end()) return it->second;
  return std::nullopt;
}

void Settings::load_config(const std::filesystem::path& path) {
  for (const auto& e : read_key_values(path)) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), e.key) == keys.end()) {
      throw ParseError(path.string(), e.line, "unknown setting '" + e.key + "'");
    }
    config_[e.key] = e.value;
  }
  config_path_ = path.string();
}

std::optional<std::pair<std::string, std::string>> Settings::lookup(const std::string& key,
                                                                    const std::optional<std::string>& flag) const {
  if (flag) return std::pair{*flag, std::string("flag")};
  if (auto name = env_name(key)) {
    if (auto v = env_value(name->c_str())) return std::pair{*v, "env " + *name};
  }
  if (auto it = config_.find(key); it != config_.end()) return std::pair{it->second, "config " + config_path_};
  return std::nullopt;
}

void Settings::record(const std::string& key, const std::string& value, const std::string& origin) {
  for (auto& e : effective_) {
    if (e.key == key) {
      e.value = value;
      e.origin = origin;
      return;
    }
  }
  effective_.push_back({key, value, origin});
}

std::string Settings::resolve(const std::string& key, const std::optional<std::string>& flag,
                              const std::string& fallback) {
  auto found = lookup(key, flag);
  if (!found) found = std::pair{fallback, std::string("default")};
  record(key, found->first, found->second);
  return found->first;
}

std::optional<std::string> Settings::resolve_optional(const std::string& key, const std::optional<std::string>& flag) {
  auto found = lookup(key, flag);
  if (!found) {
    record(key, "(unset)", "default");
    return std::nullopt;
  }
  record(key, found->first, found->second);
  return found->first;
}

double Settings::resolve_double(const std::string& key, const std::optional<double>& flag, double fallback) {
  if (flag) {
    record(key, format_double(*flag), "flag");
    return *flag;
  }
  if (auto found = lookup(key, std::nullopt)) {
    const auto v = parse_as<double>(key, found->first, found->second);
    record(key, format_double(v), found->second);
    return v;
  }
  record(key, format_double(fallback), "default");
  return fallback;
}

long long Settings::resolve_int(const std::string& key, const std::optional<long long>& flag, long long fallback) {
  if (flag) {
    record(key, std::to_string(*flag), "flag");
    return *flag;
  }
  if (auto found = lookup(key, std::nullopt)) {
    const auto v = parse_as<long long>(key, found->first, found->second);
    record(key, std::to_string(v), found->second);
    return v;
  }
  record(key, std::to_string(fallback), "default");
  return fallback;
}

void Settings::print(std::ostream& out) const {
  out << "# effective configuration\n";
  for (const auto& e : effective_) out << "#   " << e.key << " = " << e.value << "  (" << e.origin << ")\n";
}

nlohmann::json Settings::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : effective_) j[e.key] = {{"value", e.value}, {"origin", e.origin}};
  return j;
}

}  // namespace nophish::cli

#include "nophish/config.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>

#include "nophish/error.hpp"
#include "text.hpp"

namespace nophish {

std::vector<KeyValueEntry> parse_key_values(std::istream& in, std::string_view source) {
  std::vector<KeyValueEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, line_no, "expected 'key = value'");
    }
    const auto key = text::trim(body.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    entries.push_back({std::string(key), std::string(text::trim(body.substr(eq + 1))), line_no});
  }
  return entries;
}

std::vector<KeyValueEntry> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse_key_values(in, path.string());
}

std::vector<std::string> read_list_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::string> items;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    items.emplace_back(body);
  }
  return items;
}

std::optional<std::string> env_value(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

std::filesystem::path default_data_dir() {
  if (auto dir = env_value("NOPHISH_DATA_DIR")) return *dir;
#ifdef NOPHISH_INSTALL_DATA_DIR
  if (std::filesystem::exists(std::filesystem::path(NOPHISH_INSTALL_DATA_DIR) / "thresholds.conf")) {
    return NOPHISH_INSTALL_DATA_DIR;
  }
#endif
#ifdef NOPHISH_SOURCE_DATA_DIR
  return NOPHISH_SOURCE_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace nophish

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nophish {

struct KeyValueEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys and values are whitespace-trimmed. A line without `=` is a
/// ParseError naming `source` and the line.
std::vector<KeyValueEntry> parse_key_values(std::istream& in, std::string_view source);
std::vector<KeyValueEntry> read_key_values(const std::filesystem::path& path);

/// Reads a list file: one entry per line, `#` comments, blanks skipped.
std::vector<std::string> read_list_file(const std::filesystem::path& path);

std::optional<std::string> env_value(const char* name);

/// Directory holding the bundled data files (public-suffix snapshot, shortener
/// list, thresholds, column map). Resolution order: NOPHISH_DATA_DIR, the
/// install prefix, the source tree.
std::filesystem::path default_data_dir();

}  // namespace nophish

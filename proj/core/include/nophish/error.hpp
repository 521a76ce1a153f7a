#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nophish {

// Stable error codes. The CLI exits with the numeric value, so the values
// must not be renumbered.
enum class ErrorCode : int {
  parse = 10,
  validation = 11,
  config = 12,
  io = 13,
  model_corrupt = 14,
  model_version = 15,
  invalid_url = 16,
  training = 17,
  network = 18,
  startup = 19,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input text. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string_view source, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data invariant (e.g. a non-ternary cell).
class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, std::string column, const std::string& message);

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorCode::config, message) {}
};

class InvalidUrl : public Error {
 public:
  explicit InvalidUrl(const std::string& message) : Error(ErrorCode::invalid_url, message) {}
};

}  // namespace nophish

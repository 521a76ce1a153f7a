#include "nophish/error.hpp"

namespace nophish {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::model_corrupt: return "model-corrupt";
    case ErrorCode::model_version: return "model-version";
    case ErrorCode::invalid_url: return "invalid-url";
    case ErrorCode::training: return "training";
    case ErrorCode::network: return "network";
    case ErrorCode::startup: return "startup";
  }
  return "unknown";
}

ParseError::ParseError(std::string_view source, std::size_t line, const std::string& message)
    : Error(ErrorCode::parse,
            std::string(source) + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

ValidationError::ValidationError(std::size_t row, std::string column, const std::string& message)
    : Error(ErrorCode::validation,
            "row " + std::to_string(row) + ", column '" + column + "': " + message),
      row_(row),
      column_(std::move(column)) {}

}  // namespace nophish

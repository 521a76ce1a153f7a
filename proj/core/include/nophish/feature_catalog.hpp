#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace nophish {

inline constexpr std::size_t kFeatureCount = 22;

/// Evidence value of a single feature: -1 phishing-indicating, 0 suspicious,
/// +1 legitimate-indicating. Stored as a plain int8 so matrices stay compact.
using Ternary = std::int8_t;

inline constexpr bool is_ternary(long long v) noexcept { return v >= -1 && v <= 1; }

enum class Label : std::int8_t { phishing = -1, legitimate = 1 };

inline constexpr int to_int(Label label) noexcept { return static_cast<int>(label); }
std::optional<Label> label_from_int(long long v) noexcept;
std::string_view to_string(Label label) noexcept;

struct FeatureInfo {
  std::size_t index;
  std::string_view id;            // stable identifier used in files and reports
  std::string_view title;         // human-readable name
  std::string_view donor_column;  // column name in the UCI phishing-websites dataset
};

/// The 22 features, indexed 0..21.
const std::array<FeatureInfo, kFeatureCount>& feature_catalog() noexcept;

std::optional<std::size_t> feature_index(std::string_view id) noexcept;

using FeatureValues = std::array<Ternary, kFeatureCount>;

}  // namespace nophish

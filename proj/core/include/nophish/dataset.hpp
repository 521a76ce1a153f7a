#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nophish/feature_catalog.hpp"

namespace nophish {

/// N x 22 ternary matrix plus labels. Rows are stored row-major.
///
/// `row_ids` records where each row came from (its 0-based data-row index in
/// the source file, or the generator's index). Splits and subsets carry the ids
/// along, which is what the train/test leak audit checks.
class LabeledDataset {
 public:
  LabeledDataset();
  explicit LabeledDataset(std::vector<std::string> feature_names);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::span<const Ternary> row(std::size_t i) const noexcept {
    return {cells_.data() + i * kFeatureCount, kFeatureCount};
  }
  Ternary at(std::size_t row, std::size_t column) const noexcept {
    return cells_[row * kFeatureCount + column];
  }
  Label label(std::size_t i) const noexcept { return labels_[i]; }
  std::uint32_t row_id(std::size_t i) const noexcept { return row_ids_[i]; }

  const std::vector<Ternary>& cells() const noexcept { return cells_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  const std::vector<std::uint32_t>& row_ids() const noexcept { return row_ids_; }

  /// Appends a row; throws ValidationError if a cell is not ternary.
  void append(std::span<const Ternary> values, Label label, std::uint32_t row_id);
  void append(std::span<const Ternary> values, Label label) {
    append(values, label, static_cast<std::uint32_t>(size()));
  }

  std::size_t count(Label label) const noexcept;
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  /// Replaces one column in place (used by permutation importance).
  void set_column(std::size_t column, std::span<const Ternary> values);

  /// Checks every documented invariant; throws ValidationError/ConfigError.
  void validate() const;

  bool operator==(const LabeledDataset&) const = default;

 private:
  std::vector<std::string> feature_names_;
  std::vector<Ternary> cells_;
  std::vector<Label> labels_;
  std::vector<std::uint32_t> row_ids_;
};

enum class DataFormat { arff, csv };

DataFormat format_from_path(const std::filesystem::path& path);
std::string_view to_string(DataFormat format) noexcept;

/// Which source column feeds each of the 22 features, and which column holds
/// the label. A source is a column name, or `#<n>` for a 0-based position.
struct ColumnMap {
  int version = 1;
  std::array<std::string, kFeatureCount> sources;
  std::string label;

  /// Donor-dataset column names (the bundled data/column_map.conf).
  static ColumnMap donor_default();
  /// Maps each feature id to a column of the same name; label column "label".
  /// This is the layout `write_dataset` produces.
  static ColumnMap identity();
  static ColumnMap load(const std::filesystem::path& path);
  static ColumnMap parse(std::istream& in, std::string_view source);
};

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const ColumnMap& columns);
LabeledDataset parse_dataset(std::istream& in, DataFormat format, const ColumnMap& columns,
                             std::string_view source_name);
void write_dataset(const LabeledDataset& ds, std::ostream& out, DataFormat format);
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path, DataFormat format);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// Seeded train/test partition. |train| = round(train_fraction * N). With
/// stratification each class contributes within one row of its proportional
/// share. The split permutes row positions, so the input order matters.
TrainTestSplit split(const LabeledDataset& ds, const SplitSpec& spec);

}  // namespace nophish

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nophish/learn/tree.hpp"

namespace nophish {

struct KnnParams {
  std::size_t k = 5;
  bool operator==(const KnnParams&) const = default;
};

/// Brute-force k-nearest-neighbours under Euclidean distance. Equal distances
/// are ordered by training-row index; a tied vote goes to the label of the
/// nearest neighbour.
class KnnModel {
 public:
  static KnnModel fit(const LabeledDataset& train, const KnnParams& params);
  /// Throws Error(training) if k is 0, k exceeds the row count, or the sizes
  /// disagree.
  static KnnModel from_parts(const KnnParams& params, std::vector<Ternary> cells, std::vector<Label> labels);

  /// Indices of the k nearest training rows, nearest first.
  std::vector<std::size_t> neighbors(std::span<const Ternary> x) const;
  Prediction predict(std::span<const Ternary> x) const;

  const KnnParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<Ternary>& cells() const noexcept { return cells_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }

  bool operator==(const KnnModel&) const = default;

 private:
  KnnParams params_;
  std::vector<Ternary> cells_;  // row-major, kFeatureCount per row
  std::vector<Label> labels_;
};

}  // namespace nophish

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nophish/learn/tree.hpp"

namespace nophish {

struct ForestParams {
  std::size_t trees = 100;
  std::size_t max_features = 4;
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency; does not affect the result

  void validate() const;
  bool operator==(const ForestParams& o) const {
    return trees == o.trees && max_features == o.max_features && max_depth == o.max_depth &&
           min_samples_leaf == o.min_samples_leaf && bootstrap == o.bootstrap && seed == o.seed;
  }
};

/// Bagged CART trees. Tree b is grown from its own generator seeded with
/// derive_seed(seed, b), so the result does not depend on thread count.
class RandomForest {
 public:
  static RandomForest fit(const LabeledDataset& train, const ForestParams& params);
  /// Reassembles a stored forest. Importances are recomputed from the nodes.
  static RandomForest from_parts(const ForestParams& params, std::vector<DecisionTree> trees,
                                 std::optional<double> oob_score);

  /// Fraction of trees voting phishing.
  double phishing_probability(std::span<const Ternary> x) const noexcept;
  Prediction predict(std::span<const Ternary> x) const noexcept;

  const ForestParams& params() const noexcept { return params_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  /// Accuracy of out-of-bag votes; rows that were never out of bag are
  /// skipped. Empty without bootstrap or when no row was ever out of bag.
  std::optional<double> oob_score() const noexcept { return oob_score_; }
  /// Mean decrease in impurity per feature, summing to 1.
  const std::array<double, kFeatureCount>& mdi() const noexcept { return mdi_; }

  bool operator==(const RandomForest&) const = default;

 private:
  ForestParams params_;
  std::vector<DecisionTree> trees_;
  std::optional<double> oob_score_;
  std::array<double, kFeatureCount> mdi_{};
};

/// importance_j = mean over trees of sum over nodes splitting on j of
/// (n_node / N) * dG, normalized to sum 1. A forest without any split yields
/// the uniform vector.
std::array<double, kFeatureCount> mdi_importance(std::span<const DecisionTree> trees);

}  // namespace nophish

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nophish/dataset.hpp"
#include "nophish/feature_catalog.hpp"
#include "nophish/rng.hpp"

namespace nophish {

/// Output of every classifier: the label and the probability that the input
/// is phishing. For trees, forests and the SVM, label == phishing iff
/// phishing_probability >= 0.5; a kNN vote tie at 0.5 follows the nearest
/// neighbour instead.
struct Prediction {
  Label label = Label::phishing;
  double phishing_probability = 1.0;
};

/// Split thresholds available on a ternary feature. A row goes left when its
/// value is <= threshold.
inline constexpr std::array<double, 2> kSplitThresholds{-0.5, 0.5};

struct TreeParams {
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = kFeatureCount;  // features examined per split (m_try)

  void validate() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t phishing = 0;     // training samples reaching the node, by class
  std::uint32_t legitimate = 0;
  double impurity_decrease = 0.0;  // G(node) - sum (n_child / n) G(child); 0 for leaves

  bool is_leaf() const noexcept { return feature < 0; }
  std::uint32_t samples() const noexcept { return phishing + legitimate; }
  /// Majority class; a tie goes to phishing.
  Label majority() const noexcept { return phishing >= legitimate ? Label::phishing : Label::legitimate; }
  bool operator==(const TreeNode&) const = default;
};

double gini(double phishing, double legitimate) noexcept;

/// CART classification tree over ternary features. Nodes are stored in
/// pre-order; node 0 is the root.
class DecisionTree {
 public:
  /// Grows a tree on `samples` (row indices into `data`, repeats allowed).
  /// The split search examines features in an order drawn from `rng`,
  /// stopping after max_features non-constant ones; among the examined
  /// candidates the largest impurity decrease wins, ties going to the lowest
  /// feature index, then the lowest threshold.
  static DecisionTree fit(const LabeledDataset& data, std::span<const std::uint32_t> samples, const TreeParams& params,
                          Rng& rng);
  /// Grows a tree on every row of `data`.
  static DecisionTree fit(const LabeledDataset& data, const TreeParams& params = {}, std::uint64_t seed = 0);

  /// Rebuilds a tree from stored nodes; throws Error(model_corrupt) if the
  /// node graph is not a valid pre-order binary tree.
  static DecisionTree from_nodes(std::vector<TreeNode> nodes);

  const TreeNode& leaf_for(std::span<const Ternary> x) const noexcept;
  Label predict(std::span<const Ternary> x) const noexcept { return leaf_for(x).majority(); }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const noexcept;
  std::size_t leaf_count() const noexcept;

  /// Adds sum over split nodes of (n_node / n_root) * impurity_decrease to the
  /// slot of each node's feature.
  void accumulate_impurity_decrease(std::array<double, kFeatureCount>& out) const noexcept;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

}  // namespace nophish

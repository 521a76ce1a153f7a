#include "nophish/learn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nophish/error.hpp"

namespace nophish {

namespace {

constexpr double kTieEpsilon = 1e-12;

int value_slot(Ternary v) noexcept { return v + 1; }

class Builder {
 public:
  Builder(const LabeledDataset& data, const TreeParams& params, Rng& rng, std::vector<std::uint32_t> samples)
      : data_(data), params_(params), rng_(rng), samples_(std::move(samples)) {}

  std::vector<TreeNode> run() {
    build(0, samples_.size(), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = -1.0;
  };

  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    TreeNode node;
    for (std::size_t i = begin; i < end; ++i) {
      if (data_.label(samples_[i]) == Label::phishing) {
        ++node.phishing;
      } else {
        ++node.legitimate;
      }
    }
    nodes_.push_back(node);

    const std::size_t n = end - begin;
    const bool pure = node.phishing == 0 || node.legitimate == 0;
    const bool depth_reached = params_.max_depth != 0 && depth >= params_.max_depth;
    if (pure || depth_reached || n < 2 * params_.min_samples_leaf) return index;

    const Split best = find_split(begin, end, node);
    if (best.feature < 0) return index;

    const auto middle = std::stable_partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin), samples_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t row) { return data_.at(row, static_cast<std::size_t>(best.feature)) <= best.threshold; });
    const auto mid = static_cast<std::size_t>(middle - samples_.begin());

    nodes_[static_cast<std::size_t>(index)].feature = best.feature;
    nodes_[static_cast<std::size_t>(index)].threshold = best.threshold;
    nodes_[static_cast<std::size_t>(index)].impurity_decrease = best.decrease;
    const auto left = build(begin, mid, depth + 1);
    const auto right = build(mid, end, depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  Split find_split(std::size_t begin, std::size_t end, const TreeNode& node) {
    std::array<std::size_t, kFeatureCount> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (params_.max_features < kFeatureCount) rng_.shuffle(std::span<std::size_t>(order));

    const double n = static_cast<double>(end - begin);
    const double parent = gini(node.phishing, node.legitimate);
    Split best;
    std::size_t examined = 0;
    for (const std::size_t f : order) {
      // counts[value][0 = phishing, 1 = legitimate]
      std::array<std::array<std::uint32_t, 2>, 3> counts{};
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = samples_[i];
        ++counts[static_cast<std::size_t>(value_slot(data_.at(row, f)))][data_.label(row) == Label::phishing ? 0 : 1];
      }
      int present = 0;
      for (const auto& c : counts) present += (c[0] + c[1]) > 0 ? 1 : 0;
      if (present < 2) continue;
      ++examined;

      for (std::size_t t = 0; t < kSplitThresholds.size(); ++t) {
        // threshold -0.5 sends {-1} left, +0.5 sends {-1, 0} left
        std::array<double, 2> left{};
        for (std::size_t v = 0; v <= t; ++v) {
          left[0] += counts[v][0];
          left[1] += counts[v][1];
        }
        const std::array<double, 2> right{node.phishing - left[0], node.legitimate - left[1]};
        const double nl = left[0] + left[1];
        const double nr = right[0] + right[1];
        const auto min_leaf = static_cast<double>(params_.min_samples_leaf);
        if (nl < min_leaf || nr < min_leaf || nl == 0 || nr == 0) continue;
        const double decrease =
            std::max(0.0, parent - (nl / n) * gini(left[0], left[1]) - (nr / n) * gini(right[0], right[1]));
        const bool better =
            decrease > best.decrease + kTieEpsilon ||
            (std::abs(decrease - best.decrease) <= kTieEpsilon &&
             (static_cast<int>(f) < best.feature ||
              (static_cast<int>(f) == best.feature && kSplitThresholds[t] < best.threshold)));
        if (best.feature < 0 || better) {
          best = Split{static_cast<int>(f), kSplitThresholds[t], decrease};
        }
      }
      if (examined == params_.max_features) break;
    }
    return best;
  }

  const LabeledDataset& data_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<std::uint32_t> samples_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

void TreeParams::validate() const {
  if (max_features < 1 || max_features > kFeatureCount) {
    throw ConfigError("max_features must be in [1, " + std::to_string(kFeatureCount) + "]");
  }
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
}

double gini(double phishing, double legitimate) noexcept {
  const double n = phishing + legitimate;
  if (n <= 0) return 0.0;
  const double p = phishing / n;
  const double q = legitimate / n;
  return 1.0 - p * p - q * q;
}

DecisionTree DecisionTree::fit(const LabeledDataset& data, std::span<const std::uint32_t> samples,
                               const TreeParams& params, Rng& rng) {
  params.validate();
  if (samples.empty()) throw Error(ErrorCode::training, "cannot grow a tree on zero samples");
  for (const auto s : samples) {
    if (s >= data.size()) throw Error(ErrorCode::training, "sample index out of range");
  }
  Builder builder(data, params, rng, std::vector<std::uint32_t>(samples.begin(), samples.end()));
  DecisionTree tree;
  tree.nodes_ = builder.run();
  return tree;
}

DecisionTree DecisionTree::fit(const LabeledDataset& data, const TreeParams& params, std::uint64_t seed) {
  std::vector<std::uint32_t> all(data.size());
  std::iota(all.begin(), all.end(), std::uint32_t{0});
  Rng rng(seed);
  return fit(data, all, params, rng);
}

DecisionTree DecisionTree::from_nodes(std::vector<TreeNode> nodes) {
  const auto corrupt = [](const std::string& why) { return Error(ErrorCode::model_corrupt, "invalid tree: " + why); };
  if (nodes.empty()) throw corrupt("no nodes");
  const auto count = static_cast<std::int32_t>(nodes.size());
  std::vector<int> parents(nodes.size(), 0);
  for (std::int32_t i = 0; i < count; ++i) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (node.samples() == 0) throw corrupt("node " + std::to_string(i) + " has no samples");
    if (node.is_leaf()) {
      if (node.feature != -1 || node.left != -1 || node.right != -1) throw corrupt("malformed leaf");
      continue;
    }
    if (node.feature >= static_cast<std::int32_t>(kFeatureCount)) throw corrupt("feature index out of range");
    if (node.threshold != kSplitThresholds[0] && node.threshold != kSplitThresholds[1]) {
      throw corrupt("unsupported threshold");
    }
    if (!std::isfinite(node.impurity_decrease) || node.impurity_decrease < 0) throw corrupt("bad impurity decrease");
    if (node.left <= i || node.right <= i || node.left >= count || node.right >= count || node.left == node.right) {
      throw corrupt("child index out of order");
    }
    ++parents[static_cast<std::size_t>(node.left)];
    ++parents[static_cast<std::size_t>(node.right)];
    const auto& l = nodes[static_cast<std::size_t>(node.left)];
    const auto& r = nodes[static_cast<std::size_t>(node.right)];
    if (l.phishing + r.phishing != node.phishing || l.legitimate + r.legitimate != node.legitimate) {
      throw corrupt("child counts do not add up");
    }
  }
  for (std::size_t i = 1; i < parents.size(); ++i) {
    if (parents[i] != 1) throw corrupt("node " + std::to_string(i) + " is not reachable exactly once");
  }
  DecisionTree tree;
  tree.nodes_ = std::move(nodes);
  return tree;
}

const TreeNode& DecisionTree::leaf_for(std::span<const Ternary> x) const noexcept {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    const auto next = x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right;
    node = &nodes_[static_cast<std::size_t>(next)];
  }
  return *node;
}

std::size_t DecisionTree::depth() const noexcept {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

void DecisionTree::accumulate_impurity_decrease(std::array<double, kFeatureCount>& out) const noexcept {
  const double total = nodes_[0].samples();
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    out[static_cast<std::size_t>(node.feature)] += (node.samples() / total) * node.impurity_decrease;
  }
}

}  // namespace nophish

#include "nophish/learn/forest.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "nophish/error.hpp"

namespace nophish {

void ForestParams::validate() const {
  if (trees < 1) throw ConfigError("a forest needs at least one tree");
  TreeParams{max_depth, min_samples_leaf, max_features}.validate();
}

std::array<double, kFeatureCount> mdi_importance(std::span<const DecisionTree> trees) {
  std::array<double, kFeatureCount> total{};
  for (const auto& tree : trees) tree.accumulate_impurity_decrease(total);
  double sum = 0.0;
  for (auto& v : total) {
    v /= static_cast<double>(std::max<std::size_t>(trees.size(), 1));
    sum += v;
  }
  if (sum <= 0.0) {
    total.fill(1.0 / static_cast<double>(kFeatureCount));
    return total;
  }
  for (auto& v : total) v /= sum;
  return total;
}

RandomForest RandomForest::fit(const LabeledDataset& train, const ForestParams& params) {
  params.validate();
  const std::size_t n = train.size();
  if (n < 2) throw Error(ErrorCode::training, "a forest needs at least two training rows");

  const TreeParams tree_params{params.max_depth, params.min_samples_leaf, params.max_features};
  std::vector<std::optional<DecisionTree>> trees(params.trees);
  std::vector<std::vector<bool>> in_bag(params.trees);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    while (true) {
      const std::size_t b = next.fetch_add(1);
      if (b >= params.trees) return;
      try {
        Rng rng(derive_seed(params.seed, b));
        std::vector<std::uint32_t> samples(n);
        std::vector<bool> bag(n, !params.bootstrap);
        if (params.bootstrap) {
          for (auto& s : samples) {
            s = static_cast<std::uint32_t>(rng.below(n));
            bag[s] = true;
          }
        } else {
          std::iota(samples.begin(), samples.end(), std::uint32_t{0});
        }
        trees[b] = DecisionTree::fit(train, samples, tree_params, rng);
        in_bag[b] = std::move(bag);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::size_t threads = params.threads != 0 ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, params.trees);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  RandomForest forest;
  forest.params_ = params;
  forest.trees_.reserve(params.trees);
  for (auto& t : trees) forest.trees_.push_back(std::move(*t));
  forest.mdi_ = mdi_importance(forest.trees_);

  if (params.bootstrap) {
    std::size_t scored = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t votes = 0;
      std::size_t phishing_votes = 0;
      for (std::size_t b = 0; b < params.trees; ++b) {
        if (in_bag[b][i]) continue;
        ++votes;
        if (forest.trees_[b].predict(train.row(i)) == Label::phishing) ++phishing_votes;
      }
      if (votes == 0) continue;
      ++scored;
      const Label predicted = 2 * phishing_votes >= votes ? Label::phishing : Label::legitimate;
      if (predicted == train.label(i)) ++correct;
    }
    if (scored > 0) forest.oob_score_ = static_cast<double>(correct) / static_cast<double>(scored);
  }
  return forest;
}

RandomForest RandomForest::from_parts(const ForestParams& params, std::vector<DecisionTree> trees,
                                      std::optional<double> oob_score) {
  params.validate();
  if (trees.size() != params.trees) throw Error(ErrorCode::model_corrupt, "tree count does not match parameters");
  RandomForest forest;
  forest.params_ = params;
  forest.trees_ = std::move(trees);
  forest.oob_score_ = oob_score;
  forest.mdi_ = mdi_importance(forest.trees_);
  return forest;
}

double RandomForest::phishing_probability(std::span<const Ternary> x) const noexcept {
  std::size_t phishing = 0;
  for (const auto& tree : trees_) {
    if (tree.predict(x) == Label::phishing) ++phishing;
  }
  return static_cast<double>(phishing) / static_cast<double>(trees_.size());
}

Prediction RandomForest::predict(std::span<const Ternary> x) const noexcept {
  const double p = phishing_probability(x);
  return {p >= 0.5 ? Label::phishing : Label::legitimate, p};
}

}  // namespace nophish

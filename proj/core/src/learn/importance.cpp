#include "nophish/learn/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nophish/error.hpp"

namespace nophish {

double accuracy(const TrainedModel& model, const LabeledDataset& data) {
  if (data.empty()) throw Error(ErrorCode::validation, "accuracy of an empty dataset is undefined");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data.row(i)).label == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::array<ImportanceScore, kFeatureCount> permutation_importance(const TrainedModel& model,
                                                                  const LabeledDataset& holdout, std::size_t repeats,
                                                                  std::uint64_t seed) {
  if (holdout.empty()) throw Error(ErrorCode::validation, "permutation importance needs a non-empty holdout");
  if (repeats == 0) throw ConfigError("permutation importance needs at least one repeat");
  const double baseline = accuracy(model, holdout);
  std::array<ImportanceScore, kFeatureCount> out{};
  LabeledDataset work = holdout;
  std::vector<Ternary> column(holdout.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    std::vector<double> drops;
    drops.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < holdout.size(); ++i) column[i] = holdout.at(i, j);
      Rng rng(derive_seed(derive_seed(seed, j), r));
      rng.shuffle(std::span<Ternary>(column));
      work.set_column(j, column);
      drops.push_back(baseline - accuracy(model, work));
    }
    for (std::size_t i = 0; i < holdout.size(); ++i) column[i] = holdout.at(i, j);
    work.set_column(j, column);

    const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(repeats);
    double var = 0.0;
    for (const double d : drops) var += (d - mean) * (d - mean);
    out[j] = {mean, std::sqrt(var / static_cast<double>(repeats))};
  }
  return out;
}

std::vector<std::size_t> rank_features(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace nophish

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nophish/learn/model.hpp"

namespace nophish {

struct ImportanceScore {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over repeats
};

/// Fraction of rows whose predicted label matches.
double accuracy(const TrainedModel& model, const LabeledDataset& data);

/// importance_j = baseline accuracy - mean accuracy after shuffling column j,
/// over `repeats` shuffles. Shuffle r of column j uses
/// derive_seed(derive_seed(seed, j), r).
std::array<ImportanceScore, kFeatureCount> permutation_importance(const TrainedModel& model,
                                                                  const LabeledDataset& holdout, std::size_t repeats,
                                                                  std::uint64_t seed);

/// Feature indices by descending score; equal scores keep index order.
std::vector<std::size_t> rank_features(std::span<const double> scores);

}  // namespace nophish

#include "nophish/learn/knn.hpp"

#include <algorithm>
#include <numeric>

#include "nophish/error.hpp"

namespace nophish {

KnnModel KnnModel::fit(const LabeledDataset& train, const KnnParams& params) {
  return from_parts(params, train.cells(), train.labels());
}

KnnModel KnnModel::from_parts(const KnnParams& params, std::vector<Ternary> cells, std::vector<Label> labels) {
  if (labels.empty()) throw Error(ErrorCode::training, "kNN model has no training rows");
  if (cells.size() != labels.size() * kFeatureCount) throw Error(ErrorCode::training, "kNN matrix size mismatch");
  if (params.k == 0) throw Error(ErrorCode::training, "k must be at least 1");
  if (params.k > labels.size()) {
    throw Error(ErrorCode::training,
                "k = " + std::to_string(params.k) + " exceeds the " + std::to_string(labels.size()) + " training rows");
  }
  KnnModel model;
  model.params_ = params;
  model.cells_ = std::move(cells);
  model.labels_ = std::move(labels);
  return model;
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const Ternary> x) const {
  // (squared distance, row index): lexicographic order gives the tie rule.
  std::vector<std::pair<int, std::size_t>> scored(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const Ternary* row = cells_.data() + i * kFeatureCount;
    int d = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const int diff = row[f] - x[f];
      d += diff * diff;
    }
    scored[i] = {d, i};
  }
  const auto k = static_cast<std::ptrdiff_t>(params_.k);
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
  std::vector<std::size_t> out(params_.k);
  for (std::size_t i = 0; i < params_.k; ++i) out[i] = scored[i].second;
  return out;
}

Prediction KnnModel::predict(std::span<const Ternary> x) const {
  const auto near = neighbors(x);
  std::size_t phishing = 0;
  for (const auto i : near) {
    if (labels_[i] == Label::phishing) ++phishing;
  }
  const std::size_t legitimate = near.size() - phishing;
  Label label;
  if (phishing != legitimate) {
    label = phishing > legitimate ? Label::phishing : Label::legitimate;
  } else {
    label = labels_[near.front()];
  }
  return {label, static_cast<double>(phishing) / static_cast<double>(near.size())};
}

}  // namespace nophish

#include "nophish/learn/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nophish/error.hpp"

namespace nophish {

void SvmParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("SVM lambda must be a positive number");
  if (epochs < 1) throw ConfigError("SVM needs at least one epoch");
}

double svm_objective(const LabeledDataset& data, std::span<const double> weights, double bias, double lambda) {
  double norm = 0.0;
  for (const double w : weights) norm += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    double margin = bias;
    for (std::size_t f = 0; f < kFeatureCount; ++f) margin += weights[f] * x[f];
    loss += std::max(0.0, 1.0 - to_int(data.label(i)) * margin);
  }
  return 0.5 * lambda * norm + loss / static_cast<double>(std::max<std::size_t>(data.size(), 1));
}

SvmModel SvmModel::fit(const LabeledDataset& train, const SvmParams& params) {
  params.validate();
  if (train.count(Label::phishing) == 0 || train.count(Label::legitimate) == 0) {
    throw Error(ErrorCode::training, "SVM training needs both classes");
  }
  const std::size_t n = train.size();
  std::array<double, kFeatureCount> w{};
  double b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  SvmModel model;
  model.params_ = params;
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    Rng rng(derive_seed(params.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    std::array<double, kFeatureCount> w_sum{};
    double b_sum = 0.0;
    for (const std::size_t i : order) {
      const double eta = 1.0 / (params.lambda * static_cast<double>(t) + 1.0);
      ++t;
      const auto x = train.row(i);
      const double y = to_int(train.label(i));
      double margin = b;
      for (std::size_t f = 0; f < kFeatureCount; ++f) margin += w[f] * x[f];
      const double shrink = 1.0 - eta * params.lambda;
      if (y * margin < 1.0) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) w[f] = shrink * w[f] + eta * y * x[f];
        b += eta * y;
      } else {
        for (auto& v : w) v *= shrink;
      }
      for (std::size_t f = 0; f < kFeatureCount; ++f) w_sum[f] += w[f];
      b_sum += b;
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) model.weights_[f] = w_sum[f] / static_cast<double>(n);
    model.bias_ = b_sum / static_cast<double>(n);
    model.objective_.push_back(svm_objective(train, model.weights_, model.bias_, params.lambda));
  }
  return model;
}

SvmModel SvmModel::from_parts(const SvmParams& params, const std::array<double, kFeatureCount>& weights, double bias,
                              std::vector<double> objective_history) {
  params.validate();
  for (const double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::model_corrupt, "non-finite SVM weight");
  }
  if (!std::isfinite(bias)) throw Error(ErrorCode::model_corrupt, "non-finite SVM bias");
  SvmModel model;
  model.params_ = params;
  model.weights_ = weights;
  model.bias_ = bias;
  model.objective_ = std::move(objective_history);
  return model;
}

double SvmModel::margin(std::span<const Ternary> x) const noexcept {
  double m = bias_;
  for (std::size_t f = 0; f < kFeatureCount; ++f) m += weights_[f] * x[f];
  return m;
}

Prediction SvmModel::predict(std::span<const Ternary> x) const noexcept {
  const double m = margin(x);
  double p = 1.0 / (1.0 + std::exp(m));
  if (m > 0.0) {
    if (p >= 0.5) p = std::nextafter(0.5, 0.0);
    return {Label::legitimate, p};
  }
  return {Label::phishing, std::max(p, 0.5)};
}

}  // namespace nophish

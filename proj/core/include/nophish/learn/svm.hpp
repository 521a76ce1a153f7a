#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nophish/learn/tree.hpp"

namespace nophish {

struct SvmParams {
  double lambda = 1e-4;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SvmParams&) const = default;
};

/// Linear soft-margin SVM trained by stochastic subgradient descent on
///   lambda/2 |w|^2 + 1/N sum max(0, 1 - y (w.x + b))
/// with step 1 / (lambda t + 1). The returned weights are the average of the
/// iterates of the final epoch.
class SvmModel {
 public:
  /// Throws Error(training) unless both classes are present.
  static SvmModel fit(const LabeledDataset& train, const SvmParams& params);
  static SvmModel from_parts(const SvmParams& params, const std::array<double, kFeatureCount>& weights, double bias,
                             std::vector<double> objective_history);

  double margin(std::span<const Ternary> x) const noexcept;
  /// Label = sign(margin) with 0 mapped to phishing; probability is the
  /// logistic squash 1 / (1 + exp(margin)), a heuristic, not calibrated.
  Prediction predict(std::span<const Ternary> x) const noexcept;

  /// Training objective of the averaged iterate after each epoch.
  const std::vector<double>& objective_history() const noexcept { return objective_; }
  const std::array<double, kFeatureCount>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  const SvmParams& params() const noexcept { return params_; }

  bool operator==(const SvmModel&) const = default;

 private:
  SvmParams params_;
  std::array<double, kFeatureCount> weights_{};
  double bias_ = 0.0;
  std::vector<double> objective_;
};

/// The primal objective above, evaluated on `data`.
double svm_objective(const LabeledDataset& data, std::span<const double> weights, double bias, double lambda);

}  // namespace nophish

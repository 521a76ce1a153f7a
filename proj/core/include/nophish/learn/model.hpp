#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nophish/learn/forest.hpp"
#include "nophish/learn/knn.hpp"
#include "nophish/learn/svm.hpp"

namespace nophish {

enum class Algorithm : std::uint8_t { random_forest = 1, knn = 2, svm = 3 };

/// "rf", "knn", "svm".
std::string_view to_string(Algorithm algo) noexcept;
std::optional<Algorithm> algorithm_from_string(std::string_view name) noexcept;

struct AlgorithmParams {
  ForestParams forest;
  KnnParams knn;
  SvmParams svm;
};

/// Free-form provenance stored with a model.
struct ModelMetadata {
  std::string trained_on;  // dataset description
  std::size_t train_rows = 0;
  double train_fraction = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const ModelMetadata&) const = default;
};

/// Any of the three classifiers. Immutable after construction and safe for
/// concurrent prediction.
class TrainedModel {
 public:
  using Variant = std::variant<RandomForest, KnnModel, SvmModel>;

  explicit TrainedModel(Variant model, ModelMetadata metadata = {});

  Algorithm algorithm() const noexcept;
  Prediction predict(std::span<const Ternary> x) const;
  std::vector<Prediction> predict_all(const LabeledDataset& data) const;

  const Variant& get() const noexcept { return model_; }
  const RandomForest* forest() const noexcept { return std::get_if<RandomForest>(&model_); }
  const KnnModel* knn() const noexcept { return std::get_if<KnnModel>(&model_); }
  const SvmModel* svm() const noexcept { return std::get_if<SvmModel>(&model_); }
  const ModelMetadata& metadata() const noexcept { return metadata_; }

  bool operator==(const TrainedModel&) const = default;

 private:
  Variant model_;
  ModelMetadata metadata_;
};

/// Trains `algo`; `seed` replaces the seed in the forest and SVM parameters.
TrainedModel train_model(Algorithm algo, const LabeledDataset& train, const AlgorithmParams& params, std::uint64_t seed,
                         ModelMetadata metadata = {});

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary container: magic, format version, algorithm tag, JSON payload and
/// CRC-32 (layout in docs/model-format.md).
std::string serialize_model(const TrainedModel& model);
/// Throws Error(model_corrupt) on any structural defect and
/// Error(model_version) for an unsupported format version.
TrainedModel deserialize_model(std::string_view bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// "<algo>-<crc32 of payload, 8 hex digits>"; stable for a given model.
std::string model_id(const TrainedModel& model);

}  // namespace nophish

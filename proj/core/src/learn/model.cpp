#include "nophish/learn/model.hpp"

#include <zlib.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nophish/error.hpp"

namespace nophish {

namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic{'N', 'O', 'P', 'H', 'M', 'D', 'L', '\0'};
constexpr std::size_t kHeaderSize = 8 + 4 + 1 + 8;
constexpr std::size_t kTrailerSize = 4;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

std::uint32_t crc32_of(std::string_view data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

Error corrupt(const std::string& why) { return Error(ErrorCode::model_corrupt, "corrupt model file: " + why); }

json metadata_to_json(const ModelMetadata& m) {
  return {{"trained_on", m.trained_on}, {"train_rows", m.train_rows}, {"train_fraction", m.train_fraction},
          {"seed", m.seed}};
}

ModelMetadata metadata_from_json(const json& j) {
  ModelMetadata m;
  m.trained_on = j.at("trained_on").get<std::string>();
  m.train_rows = j.at("train_rows").get<std::size_t>();
  m.train_fraction = j.at("train_fraction").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

json forest_to_json(const RandomForest& forest) {
  const auto& p = forest.params();
  json trees = json::array();
  for (const auto& tree : forest.trees()) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.phishing, n.legitimate,
                                   n.impurity_decrease}));
    }
    trees.push_back(std::move(nodes));
  }
  json j{{"params",
          {{"trees", p.trees},
           {"max_features", p.max_features},
           {"max_depth", p.max_depth},
           {"min_samples_leaf", p.min_samples_leaf},
           {"bootstrap", p.bootstrap},
           {"seed", p.seed}}},
         {"trees", std::move(trees)}};
  j["oob_score"] = forest.oob_score() ? json(*forest.oob_score()) : json(nullptr);
  return j;
}

RandomForest forest_from_json(const json& j) {
  const auto& jp = j.at("params");
  ForestParams p;
  p.trees = jp.at("trees").get<std::size_t>();
  p.max_features = jp.at("max_features").get<std::size_t>();
  p.max_depth = jp.at("max_depth").get<std::size_t>();
  p.min_samples_leaf = jp.at("min_samples_leaf").get<std::size_t>();
  p.bootstrap = jp.at("bootstrap").get<bool>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  std::vector<DecisionTree> trees;
  for (const auto& jt : j.at("trees")) {
    std::vector<TreeNode> nodes;
    nodes.reserve(jt.size());
    for (const auto& jn : jt) {
      if (!jn.is_array() || jn.size() != 7) throw corrupt("malformed tree node");
      TreeNode n;
      n.feature = jn[0].get<std::int32_t>();
      n.threshold = jn[1].get<double>();
      n.left = jn[2].get<std::int32_t>();
      n.right = jn[3].get<std::int32_t>();
      n.phishing = jn[4].get<std::uint32_t>();
      n.legitimate = jn[5].get<std::uint32_t>();
      n.impurity_decrease = jn[6].get<double>();
      nodes.push_back(n);
    }
    trees.push_back(DecisionTree::from_nodes(std::move(nodes)));
  }
  std::optional<double> oob;
  if (!j.at("oob_score").is_null()) oob = j.at("oob_score").get<double>();
  try {
    return RandomForest::from_parts(p, std::move(trees), oob);
  } catch (const ConfigError& e) {
    throw corrupt(e.what());
  }
}

char cell_char(Ternary v) { return v < 0 ? '-' : (v > 0 ? '+' : '0'); }

Ternary cell_value(char c) {
  switch (c) {
    case '-': return -1;
    case '0': return 0;
    case '+': return 1;
    default: throw corrupt("bad cell character");
  }
}

json knn_to_json(const KnnModel& knn) {
  std::string cells;
  cells.reserve(knn.cells().size());
  for (const auto v : knn.cells()) cells.push_back(cell_char(v));
  std::string labels;
  labels.reserve(knn.labels().size());
  for (const auto l : knn.labels()) labels.push_back(l == Label::phishing ? '-' : '+');
  return {{"params", {{"k", knn.params().k}}}, {"rows", knn.size()}, {"cells", cells}, {"labels", labels}};
}

KnnModel knn_from_json(const json& j) {
  KnnParams p;
  p.k = j.at("params").at("k").get<std::size_t>();
  const auto rows = j.at("rows").get<std::size_t>();
  const auto& cell_text = j.at("cells").get_ref<const std::string&>();
  const auto& label_text = j.at("labels").get_ref<const std::string&>();
  if (cell_text.size() != rows * kFeatureCount || label_text.size() != rows) throw corrupt("kNN size mismatch");
  std::vector<Ternary> cells(cell_text.size());
  for (std::size_t i = 0; i < cell_text.size(); ++i) cells[i] = cell_value(cell_text[i]);
  std::vector<Label> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (label_text[i] != '-' && label_text[i] != '+') throw corrupt("bad label character");
    labels[i] = label_text[i] == '-' ? Label::phishing : Label::legitimate;
  }
  try {
    return KnnModel::from_parts(p, std::move(cells), std::move(labels));
  } catch (const Error& e) {
    throw corrupt(e.what());
  }
}

json svm_to_json(const SvmModel& svm) {
  return {{"params", {{"lambda", svm.params().lambda}, {"epochs", svm.params().epochs}, {"seed", svm.params().seed}}},
          {"weights", svm.weights()},
          {"bias", svm.bias()},
          {"objective_history", svm.objective_history()}};
}

SvmModel svm_from_json(const json& j) {
  SvmParams p;
  const auto& jp = j.at("params");
  p.lambda = jp.at("lambda").get<double>();
  p.epochs = jp.at("epochs").get<std::size_t>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  const auto weights = j.at("weights").get<std::vector<double>>();
  if (weights.size() != kFeatureCount) throw corrupt("SVM weight vector has wrong length");
  std::array<double, kFeatureCount> w{};
  std::copy(weights.begin(), weights.end(), w.begin());
  try {
    return SvmModel::from_parts(p, w, j.at("bias").get<double>(), j.at("objective_history").get<std::vector<double>>());
  } catch (const ConfigError& e) {
    throw corrupt(e.what());
  }
}

std::string payload_of(const TrainedModel& model) {
  json j;
  j["format"] = "nophish-model";
  j["algorithm"] = std::string(to_string(model.algorithm()));
  j["metadata"] = metadata_to_json(model.metadata());
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomForest>) {
          j["model"] = forest_to_json(m);
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          j["model"] = knn_to_json(m);
        } else {
          j["model"] = svm_to_json(m);
        }
      },
      model.get());
  return j.dump();
}

std::string hex8(std::uint32_t v) {
  char buffer[9];
  std::snprintf(buffer, sizeof(buffer), "%08x", v);
  return buffer;
}

}  // namespace

std::string_view to_string(Algorithm algo) noexcept {
  switch (algo) {
    case Algorithm::random_forest: return "rf";
    case Algorithm::knn: return "knn";
    case Algorithm::svm: return "svm";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_string(std::string_view name) noexcept {
  if (name == "rf") return Algorithm::random_forest;
  if (name == "knn") return Algorithm::knn;
  if (name == "svm") return Algorithm::svm;
  return std::nullopt;
}

TrainedModel::TrainedModel(Variant model, ModelMetadata metadata)
    : model_(std::move(model)), metadata_(std::move(metadata)) {}

Algorithm TrainedModel::algorithm() const noexcept {
  switch (model_.index()) {
    case 0: return Algorithm::random_forest;
    case 1: return Algorithm::knn;
    default: return Algorithm::svm;
  }
}

Prediction TrainedModel::predict(std::span<const Ternary> x) const {
  return std::visit([&](const auto& m) { return m.predict(x); }, model_);
}

std::vector<Prediction> TrainedModel::predict_all(const LabeledDataset& data) const {
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(predict(data.row(i)));
  return out;
}

TrainedModel train_model(Algorithm algo, const LabeledDataset& train, const AlgorithmParams& params,
                         std::uint64_t seed, ModelMetadata metadata) {
  metadata.seed = seed;
  if (metadata.train_rows == 0) metadata.train_rows = train.size();
  switch (algo) {
    case Algorithm::random_forest: {
      auto p = params.forest;
      p.seed = seed;
      return TrainedModel(RandomForest::fit(train, p), std::move(metadata));
    }
    case Algorithm::knn:
      return TrainedModel(KnnModel::fit(train, params.knn), std::move(metadata));
    case Algorithm::svm: {
      auto p = params.svm;
      p.seed = seed;
      return TrainedModel(SvmModel::fit(train, p), std::move(metadata));
    }
  }
  throw ConfigError("unknown algorithm");
}

std::string serialize_model(const TrainedModel& model) {
  const std::string payload = payload_of(model);
  std::string out(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(out, kModelFormatVersion);
  out.push_back(static_cast<char>(model.algorithm()));
  put_le<std::uint64_t>(out, payload.size());
  out += payload;
  put_le<std::uint32_t>(out, crc32_of(payload));
  return out;
}

TrainedModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < kHeaderSize + kTrailerSize) throw corrupt("file is shorter than the header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw corrupt("bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::model_version, "model format version " + std::to_string(version) +
                                              " is not supported (this build reads version " +
                                              std::to_string(kModelFormatVersion) + ")");
  }
  const auto tag = static_cast<std::uint8_t>(bytes[12]);
  if (tag < 1 || tag > 3) throw corrupt("unknown algorithm tag " + std::to_string(tag));
  const auto length = get_le<std::uint64_t>(bytes, 13);
  if (length != bytes.size() - kHeaderSize - kTrailerSize) throw corrupt("payload length does not match file size");
  const auto payload = bytes.substr(kHeaderSize, length);
  if (get_le<std::uint32_t>(bytes, kHeaderSize + length) != crc32_of(payload)) throw corrupt("checksum mismatch");

  try {
    const json j = json::parse(payload);
    if (j.at("format").get<std::string>() != "nophish-model") throw corrupt("unexpected payload format");
    const auto algo = algorithm_from_string(j.at("algorithm").get<std::string>());
    if (!algo || static_cast<std::uint8_t>(*algo) != tag) throw corrupt("algorithm tag disagrees with payload");
    auto metadata = metadata_from_json(j.at("metadata"));
    const auto& m = j.at("model");
    switch (*algo) {
      case Algorithm::random_forest: return TrainedModel(forest_from_json(m), std::move(metadata));
      case Algorithm::knn: return TrainedModel(knn_from_json(m), std::move(metadata));
      case Algorithm::svm: return TrainedModel(svm_from_json(m), std::move(metadata));
    }
  } catch (const json::exception& e) {
    throw corrupt(std::string("payload: ") + e.what());
  }
  throw corrupt("unreachable");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot move model into place: " + ec.message());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open model " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

std::string model_id(const TrainedModel& model) {
  return std::string(to_string(model.algorithm())) + "-" + hex8(crc32_of(payload_of(model)));
}

}  // namespace nophish

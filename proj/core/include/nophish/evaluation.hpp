#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nophish/dataset.hpp"
#include "nophish/learn/model.hpp"
#include "nophish/service.hpp"

namespace nophish {

/// Positive class = phishing.
struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
  void add(Label truth, Label predicted) noexcept;
  /// The same counts with legitimate as the positive class.
  ConfusionMatrix legitimate_positive() const noexcept { return {tp, fn, fp, tn}; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Empty when the denominator is zero.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
};

Metrics metrics(const ConfusionMatrix& cm) noexcept;

ConfusionMatrix confusion(const TrainedModel& model, const LabeledDataset& test);

struct EvalReport {
  Algorithm algorithm = Algorithm::random_forest;
  SplitSpec split;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  ConfusionMatrix confusion;
  Metrics phishing_positive;
  Metrics legitimate_positive;
};

EvalReport evaluate(const TrainedModel& model, const LabeledDataset& test, const SplitSpec& split,
                    std::size_t train_rows);

/// Row ids on each side of one harness cell, as seen by the training step.
struct CellAudit {
  Algorithm algorithm;
  double train_fraction;
  std::uint64_t seed;
  std::span<const std::uint32_t> train_ids;
  std::span<const std::uint32_t> test_ids;
};

struct CompareOptions {
  std::vector<Algorithm> algorithms{Algorithm::random_forest, Algorithm::knn, Algorithm::svm};
  std::vector<double> splits{0.5, 0.7, 0.9};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  AlgorithmParams params;
  bool stratified = true;
  std::size_t threads = 1;
  /// Called once per cell before training; may run on worker threads.
  std::function<void(const CellAudit&)> observer;
};

struct AggregateRow {
  Algorithm algorithm;
  double train_fraction;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over seeds
  std::size_t n = 0;
};

struct Comparison {
  std::vector<EvalReport> reports;  // sorted by algorithm, split, seed
  std::vector<AggregateRow> aggregates;
};

/// Trains and evaluates every (algorithm, split, seed) cell. All algorithms
/// see the same split for a given (split, seed).
Comparison compare_algorithms(const LabeledDataset& data, const CompareOptions& options);

/// Metric names used in aggregates and plot data.
std::vector<std::string> metric_names();
std::optional<double> metric_value(const EvalReport& report, std::string_view name);

void write_table(std::ostream& out, const Comparison& comparison);
void write_csv(std::ostream& out, const Comparison& comparison);
/// Columns: algo, split, seed, metric, value.
void write_plot_data(std::ostream& out, const Comparison& comparison);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const Comparison& comparison);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const Metrics& m);

/// One line of a labeled URL corpus: "url,label[,fixture_path]". Labels are
/// "phishing"/"legitimate" or -1/1. A relative fixture path is resolved
/// against the corpus file's directory.
struct CorpusEntry {
  std::string url;
  Label label = Label::legitimate;
  std::optional<std::filesystem::path> fixture_path;
};

std::vector<CorpusEntry> parse_corpus(std::istream& in, std::string_view source,
                                      const std::filesystem::path& base_dir = {});
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path);

struct BenchEntry {
  CorpusEntry entry;
  std::optional<ScanReport> report;
  bool scorable = false;
  std::string note;  // why an entry was excluded
};

struct BenchResult {
  ConfusionMatrix confusion;  // dangerous and warning count as positive
  std::vector<BenchEntry> entries;
  std::size_t unscorable = 0;
};

bool is_positive(Verdict v) noexcept;

/// Scans each URL. An entry with a fixture_path is scanned with that file as
/// its page; others use the scanner's page fetcher. Degraded scans (page not
/// fetched) and invalid URLs are excluded from the matrix and listed.
BenchResult field_bench(std::span<const CorpusEntry> corpus, const Scanner& scanner);

void write_bench_table(std::ostream& out, const BenchResult& result);
nlohmann::json to_json(const BenchResult& result);

}  // namespace nophish

#include <csignal>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "nophish/config.hpp"
#include "nophish/dataset.hpp"
#include "nophish/error.hpp"
#include "nophish/evaluation.hpp"
#include "nophish/features.hpp"
#include "nophish/learn/importance.hpp"
#include "nophish/learn/model.hpp"
#include "nophish/probe.hpp"
#include "nophish/service.hpp"
#include "nophish/version.hpp"
#include "settings.hpp"

namespace {

using namespace nophish;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 20;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::string> config;
  std::optional<long long> seed;
  std::optional<std::string> data_dir;
  bool json = false;
};

struct DataOptions {
  std::optional<std::string> data;
  std::optional<std::string> format;
  std::optional<std::string> columns;
};

struct ModelOptions {
  std::optional<long long> trees;
  std::optional<long long> m_try;
  std::optional<long long> max_depth;
  std::optional<long long> min_leaf;
  bool no_bootstrap = false;
  std::optional<long long> k;
  std::optional<double> lambda;
  std::optional<long long> epochs;
  std::optional<long long> threads;
};

struct ProviderOptions {
  bool live = false;
  bool offline = false;
  std::optional<std::string> fixtures;
  std::optional<std::string> rank_file;
  std::optional<std::string> report_file;
  std::optional<std::string> index_file;
  std::optional<long long> fetch_timeout_ms;
  std::optional<long long> provider_timeout_ms;
};

struct PolicyOptions {
  std::optional<double> warn;
  std::optional<long long> fail_override;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Config file (key = value lines)");
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--data-dir", c.data_dir, "Directory with suffix list, shortener list and thresholds");
  cmd->add_flag("--json", c.json, "Machine-readable output on stdout");
}

void add_data(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.data, "Labelled dataset (.arff or .csv)");
  cmd->add_option("--format", d.format, "arff or csv (default: from the file extension)");
  cmd->add_option("--columns", d.columns, "Column map: auto, donor, identity or a file");
}

void add_model_params(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--trees", m.trees, "Random forest: number of trees");
  cmd->add_option("--m-try", m.m_try, "Random forest: features examined per split");
  cmd->add_option("--max-depth", m.max_depth, "Random forest: depth limit, 0 for none");
  cmd->add_option("--min-leaf", m.min_leaf, "Random forest: minimum samples per leaf");
  cmd->add_flag("--no-bootstrap", m.no_bootstrap, "Random forest: grow every tree on all rows");
  cmd->add_option("--k", m.k, "kNN: neighbour count");
  cmd->add_option("--lambda", m.lambda, "SVM: regularization strength");
  cmd->add_option("--epochs", m.epochs, "SVM: passes over the training data");
  cmd->add_option("--threads", m.threads, "Worker threads (results do not depend on it)");
}

void add_providers(CLI::App* cmd, ProviderOptions& p) {
  cmd->add_flag("--live", p.live, "Query the network (HTTP, WHOIS, DNS)");
  cmd->add_flag("--offline", p.offline, "Never touch the network (default)");
  cmd->add_option("--fixtures", p.fixtures, "Fixture directory for offline evidence");
  cmd->add_option("--rank-file", p.rank_file, "Live mode: CSV domain,rank");
  cmd->add_option("--report-file", p.report_file, "Live mode: reported hosts/IPs, one per line");
  cmd->add_option("--index-file", p.index_file, "Live mode: hosts known to be indexed");
  cmd->add_option("--fetch-timeout-ms", p.fetch_timeout_ms, "Page fetch timeout");
  cmd->add_option("--provider-timeout-ms", p.provider_timeout_ms, "Per-provider lookup timeout");
}

void add_policy(CLI::App* cmd, PolicyOptions& p) {
  cmd->add_option("--warn", p.warn, "Warning threshold on the phishing probability");
  cmd->add_option("--fail-override", p.fail_override, "Failing-feature count that forces at least a warning (0: off)");
}

std::uint64_t resolve_seed(cli::Settings& s, const Common& c) {
  const auto seed = s.resolve_int("seed", c.seed, 0);
  if (seed < 0) throw UsageError("--seed must be non-negative");
  return static_cast<std::uint64_t>(seed);
}

std::filesystem::path resolve_data_dir(cli::Settings& s, const Common& c) {
  return s.resolve("data_dir", c.data_dir, default_data_dir().string());
}

cli::Settings make_settings(const Common& c) {
  cli::Settings s;
  if (c.config) s.load_config(*c.config);
  return s;
}

LabeledDataset load_data(cli::Settings& s, const DataOptions& d) {
  const auto path = s.resolve_optional("data", d.data);
  if (!path) throw UsageError("--data is required");
  const auto format_name = s.resolve("format", d.format, "auto");
  DataFormat format;
  if (format_name == "auto") {
    format = format_from_path(*path);
  } else if (format_name == "arff") {
    format = DataFormat::arff;
  } else if (format_name == "csv") {
    format = DataFormat::csv;
  } else {
    throw UsageError("--format must be arff or csv");
  }
  const auto columns = s.resolve("columns", d.columns, "auto");
  if (columns == "donor") return load_dataset(*path, format, ColumnMap::donor_default());
  if (columns == "identity") return load_dataset(*path, format, ColumnMap::identity());
  if (columns == "auto") {
    try {
      return load_dataset(*path, format, ColumnMap::donor_default());
    } catch (const Error&) {
      return load_dataset(*path, format, ColumnMap::identity());
    }
  }
  return load_dataset(*path, format, ColumnMap::load(columns));
}

AlgorithmParams resolve_params(cli::Settings& s, const ModelOptions& m) {
  AlgorithmParams p;
  const auto positive = [](long long v, const char* name) {
    if (v < 0) throw UsageError(std::string("--") + name + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  p.forest.trees = positive(s.resolve_int("trees", m.trees, 100), "trees");
  p.forest.max_features = positive(s.resolve_int("m_try", m.m_try, 4), "m-try");
  p.forest.max_depth = positive(s.resolve_int("max_depth", m.max_depth, 0), "max-depth");
  p.forest.min_samples_leaf = positive(s.resolve_int("min_leaf", m.min_leaf, 1), "min-leaf");
  p.forest.bootstrap = s.resolve("bootstrap", m.no_bootstrap ? std::optional<std::string>("false") : std::nullopt,
                                 "true") != "false";
  p.forest.threads = positive(s.resolve_int("threads", m.threads, 0), "threads");
  p.knn.k = positive(s.resolve_int("k", m.k, 5), "k");
  p.svm.lambda = s.resolve_double("lambda", m.lambda, 1e-4);
  p.svm.epochs = positive(s.resolve_int("epochs", m.epochs, 20), "epochs");
  try {
    p.forest.validate();
    p.svm.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (p.knn.k == 0) throw UsageError("--k must be at least 1");
  return p;
}

Algorithm resolve_algorithm(cli::Settings& s, const std::optional<std::string>& flag) {
  const auto name = s.resolve("algo", flag, "rf");
  const auto algo = algorithm_from_string(name);
  if (!algo) throw UsageError("unknown algorithm '" + name + "' (expected rf, knn or svm)");
  return *algo;
}

std::filesystem::path resolve_model_path(cli::Settings& s, const std::optional<std::string>& flag,
                                         const std::filesystem::path& data_dir) {
  std::string fallback = (data_dir / "models" / "nophish-rf.model").string();
#ifdef NOPHISH_BUILD_MODEL_PATH
  if (!std::filesystem::exists(fallback) && std::filesystem::exists(NOPHISH_BUILD_MODEL_PATH)) {
    fallback = NOPHISH_BUILD_MODEL_PATH;
  }
#endif
  return s.resolve("model", flag, fallback);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("bad ") + what + " '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("bad ") + what + " '" + s + "'");
  }
}

std::string fixed(std::optional<double> v, int digits = 3) {
  if (!v) return "n/a";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, *v);
  return buffer;
}

void print_report(std::ostream& out, const EvalReport& r) {
  const auto& cm = r.confusion;
  out << "held-out rows: " << r.test_rows << " (train " << r.train_rows << ")\n";
  out << "phishing as positive:   accuracy " << fixed(r.phishing_positive.accuracy) << "  precision "
      << fixed(r.phishing_positive.precision) << "  recall " << fixed(r.phishing_positive.recall) << "\n";
  out << "legitimate as positive: precision " << fixed(r.legitimate_positive.precision) << "  recall "
      << fixed(r.legitimate_positive.recall) << "\n";
  out << "confusion (phishing positive): TN " << cm.tn << "  FP " << cm.fp << "  FN " << cm.fn << "  TP " << cm.tp
      << "\n";
}

std::shared_ptr<const TrainedModel> load_model_for(cli::Settings& s, const std::optional<std::string>& flag,
                                                   const std::filesystem::path& data_dir) {
  const auto path = resolve_model_path(s, flag, data_dir);
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::io, "model file not found: " + path.string() + " (train one with `nophish train`)");
  }
  return std::make_shared<const TrainedModel>(load_model(path));
}

ProviderSet resolve_providers(cli::Settings& s, const ProviderOptions& p) {
  if (p.live && p.offline) throw UsageError("--live and --offline are mutually exclusive");
  const auto mode = s.resolve("mode", p.live ? std::optional<std::string>("live") : std::nullopt, "offline");
  const auto fetch_ms = s.resolve_int("fetch_timeout_ms", p.fetch_timeout_ms, 5000);
  const auto provider_ms = s.resolve_int("provider_timeout_ms", p.provider_timeout_ms, 3000);
  if (fetch_ms <= 0 || provider_ms <= 0) throw UsageError("timeouts must be positive");
  ProviderSet set;
  if (mode == "live") {
    LiveProviderConfig config;
    if (auto v = s.resolve_optional("rank_file", p.rank_file)) config.rank_file = *v;
    if (auto v = s.resolve_optional("report_file", p.report_file)) config.report_file = *v;
    if (auto v = s.resolve_optional("index_file", p.index_file)) config.index_file = *v;
    config.provider_timeout = std::chrono::milliseconds(provider_ms);
    config.whois_timeout = std::chrono::milliseconds(provider_ms);
    set = make_live_providers(config);
  } else if (auto dir = s.resolve_optional("fixtures", p.fixtures)) {
    set = make_fixture_providers(*dir);
    if (p.provider_timeout_ms) set.provider_timeout = std::chrono::milliseconds(provider_ms);
  } else {
    set = make_stub_providers(std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now()));
    set.provider_timeout = std::chrono::milliseconds(provider_ms);
  }
  return set;
}

FetchPolicy resolve_fetch(cli::Settings& s, const ProviderOptions& p) {
  FetchPolicy f;
  f.timeout = std::chrono::milliseconds(s.resolve_int("fetch_timeout_ms", p.fetch_timeout_ms, 5000));
  return f;
}

VerdictPolicy resolve_policy(cli::Settings& s, const PolicyOptions& p) {
  VerdictPolicy policy;
  policy.warn_threshold = s.resolve_double("warn_threshold", p.warn, 0.35);
  const auto override_count = s.resolve_int("fail_override", p.fail_override, 0);
  if (override_count < 0) throw UsageError("--fail-override must be non-negative");
  if (override_count > 0) policy.min_fail_override = static_cast<std::size_t>(override_count);
  try {
    policy.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return policy;
}

std::shared_ptr<const Scanner> make_scanner(cli::Settings& s, const Common& c, const std::optional<std::string>& model,
                                            const ProviderOptions& p, const PolicyOptions& pol) {
  const auto data_dir = resolve_data_dir(s, c);
  auto loaded = load_model_for(s, model, data_dir);
  auto extractor = std::make_shared<const FeatureExtractor>(FeatureExtractor::from_data_dir(data_dir));
  auto providers = resolve_providers(s, p);
  const auto policy = resolve_policy(s, pol);
  const auto fetch = resolve_fetch(s, p);
  return std::make_shared<const Scanner>(std::move(loaded), std::move(extractor), std::move(providers), policy, fetch);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << content;
}

// --- commands ---------------------------------------------------------------

struct TrainCmd {
  Common common;
  DataOptions data;
  ModelOptions model;
  std::optional<std::string> algo;
  std::optional<double> split;
  std::optional<std::string> out;
  std::optional<std::string> trained_on;

  int run() {
    auto s = make_settings(common);
    const auto seed = resolve_seed(s, common);
    const auto algorithm = resolve_algorithm(s, algo);
    const double fraction = s.resolve_double("split", split, 0.9);
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("--split must be in (0, 1]");
    const auto params = resolve_params(s, model);
    const auto out_path = s.resolve_optional("out", out);
    if (!out_path) throw UsageError("--out is required");
    const auto ds = load_data(s, data);
    const auto description =
        s.resolve("trained_on", trained_on, std::filesystem::path(*s.resolve_optional("data", data.data)).filename().string());
    s.print(std::cerr);

    ModelMetadata meta{description, 0, fraction, seed};
    std::optional<TrainTestSplit> parts;
    if (fraction < 1.0) parts = nophish::split(ds, SplitSpec{fraction, seed, true});
    const LabeledDataset& train = parts ? parts->train : ds;
    meta.train_rows = train.size();
    const auto trained = train_model(algorithm, train, params, seed, meta);
    save_model(trained, *out_path);

    json j{{"command", "train"}, {"model", *out_path}, {"model_id", model_id(trained)},
           {"algorithm", std::string(to_string(algorithm))}, {"train_rows", train.size()}, {"config", s.to_json()}};
    if (const auto* f = trained.forest()) j["oob_score"] = f->oob_score() ? json(*f->oob_score()) : json(nullptr);
    std::optional<EvalReport> report;
    if (parts) {
      report = evaluate(trained, parts->test, SplitSpec{fraction, seed, true}, train.size());
      j["report"] = to_json(*report);
    }
    if (common.json) {
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "model written to " << *out_path << " (" << model_id(trained) << ")\n";
      if (const auto* f = trained.forest(); f && f->oob_score()) {
        std::cout << "out-of-bag accuracy: " << fixed(f->oob_score()) << "\n";
      }
      if (report) print_report(std::cout, *report);
    }
    return 0;
  }
};

struct EvalCmd {
  Common common;
  DataOptions data;
  ModelOptions model;
  std::optional<std::string> algos;
  std::optional<std::string> splits;
  std::optional<std::string> seeds;
  std::optional<long long> repeats;
  std::optional<std::string> model_path;
  std::optional<std::string> csv;
  std::optional<std::string> plot_data;
  std::optional<std::string> json_out;

  int run() {
    auto s = make_settings(common);
    const auto seed = resolve_seed(s, common);
    const auto ds = load_data(s, data);

    if (model_path) {
      s.resolve("model", model_path, "");
      s.print(std::cerr);
      const auto trained = load_model(*model_path);
      const auto report = evaluate(trained, ds, SplitSpec{0.0, seed, false}, trained.metadata().train_rows);
      if (common.json) {
        std::cout << json{{"command", "eval"}, {"report", to_json(report)}, {"config", s.to_json()}}.dump(2) << "\n";
      } else {
        print_report(std::cout, report);
      }
      return 0;
    }

    CompareOptions options;
    options.params = resolve_params(s, model);
    options.threads = std::max<std::size_t>(1, options.params.forest.threads);
    options.algorithms.clear();
    for (const auto& name : split_list(s.resolve("algos", algos, "rf,knn,svm"))) {
      const auto a = algorithm_from_string(name);
      if (!a) throw UsageError("unknown algorithm '" + name + "'");
      options.algorithms.push_back(*a);
    }
    options.splits.clear();
    for (const auto& f : split_list(s.resolve("splits", splits, "0.5,0.7,0.9"))) {
      const double v = parse_double(f, "split");
      if (!(v > 0.0 && v < 1.0)) throw UsageError("splits must be in (0, 1)");
      options.splits.push_back(v);
    }
    options.seeds.clear();
    if (auto list = s.resolve_optional("seeds", seeds)) {
      for (const auto& v : split_list(*list)) options.seeds.push_back(parse_u64(v, "seed"));
    } else {
      const auto n = s.resolve_int("repeats", repeats, 5);
      if (n < 1) throw UsageError("--repeats must be at least 1");
      for (long long i = 0; i < n; ++i) options.seeds.push_back(seed + static_cast<std::uint64_t>(i));
    }
    s.print(std::cerr);

    const auto start = std::chrono::steady_clock::now();
    const auto comparison = compare_algorithms(ds, options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (csv) {
      std::ostringstream o;
      write_csv(o, comparison);
      write_file(*csv, o.str());
    }
    if (plot_data) {
      std::ostringstream o;
      write_plot_data(o, comparison);
      write_file(*plot_data, o.str());
    }
    if (json_out) write_file(*json_out, to_json(comparison).dump(2) + "\n");
    if (common.json) {
      auto j = to_json(comparison);
      j["command"] = "eval";
      j["config"] = s.to_json();
      std::cout << j.dump(2) << "\n";
    } else {
      write_table(std::cout, comparison);
    }
    std::cerr << "# sweep finished in " << fixed(seconds, 1) << " s\n";
    return 0;
  }
};

struct ImportanceCmd {
  Common common;
  DataOptions data;
  ModelOptions model;
  std::optional<std::string> model_path;
  std::optional<double> split;
  std::optional<std::string> method;
  std::optional<long long> repeats;
  std::optional<std::string> plot_data;

  int run() {
    auto s = make_settings(common);
    const auto seed = resolve_seed(s, common);
    const auto data_dir = resolve_data_dir(s, common);
    const auto m = s.resolve("method", method, "both");
    if (m != "mdi" && m != "permutation" && m != "both") throw UsageError("--method must be mdi, permutation or both");
    const auto n = s.resolve_int("repeats", repeats, 5);
    if (n < 1) throw UsageError("--repeats must be at least 1");
    std::shared_ptr<const TrainedModel> trained;
    std::optional<LabeledDataset> holdout;
    if (split) {
      if (model_path) throw UsageError("--split trains a new forest and cannot be combined with --model");
      const double fraction = s.resolve_double("split", split, 0.9);
      if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("--split must be in (0, 1)");
      const auto params = resolve_params(s, model);
      auto parts = nophish::split(load_data(s, data), SplitSpec{fraction, seed, true});
      trained = std::make_shared<const TrainedModel>(train_model(Algorithm::random_forest, parts.train, params, seed));
      holdout = std::move(parts.test);
    } else {
      trained = load_model_for(s, model_path, data_dir);
      if (m != "mdi") holdout = load_data(s, data);
    }
    s.print(std::cerr);

    const auto& catalog = feature_catalog();
    json j{{"command", "importance"}, {"config", s.to_json()}};
    std::ostringstream plot;
    plot << "method,feature_index,feature_id,mean,std\n";
    const auto emit = [&](const std::string& name, const std::array<double, kFeatureCount>& mean,
                          const std::array<double, kFeatureCount>& stdev) {
      const auto order = rank_features(mean);
      json rows = json::array();
      if (!common.json) {
        std::cout << name << " importance\n rank  idx  feature                    score      std\n";
      }
      for (std::size_t r = 0; r < order.size(); ++r) {
        const auto f = order[r];
        rows.push_back({{"rank", r + 1}, {"index", f}, {"id", std::string(catalog[f].id)}, {"mean", mean[f]},
                        {"std", stdev[f]}});
        if (!common.json) {
          std::string id(catalog[f].id);
          id.resize(std::max<std::size_t>(id.size(), 24), ' ');
          char line[160];
          std::snprintf(line, sizeof(line), " %4zu  %3zu  %s  %8.5f  %8.5f\n", r + 1, f, id.c_str(), mean[f], stdev[f]);
          std::cout << line;
        }
      }
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        plot << name << "," << f << "," << catalog[f].id << "," << mean[f] << "," << stdev[f] << "\n";
      }
      j[name] = std::move(rows);
      if (!common.json) std::cout << "\n";
    };

    if (m != "permutation") {
      const auto* forest = trained->forest();
      if (!forest) throw ConfigError("MDI importance needs a random forest model");
      emit("mdi", forest->mdi(), std::array<double, kFeatureCount>{});
    }
    if (m != "mdi") {
      const auto scores = permutation_importance(*trained, *holdout, static_cast<std::size_t>(n), seed);
      std::array<double, kFeatureCount> mean{};
      std::array<double, kFeatureCount> stdev{};
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        mean[f] = scores[f].mean;
        stdev[f] = scores[f].std;
      }
      emit("permutation", mean, stdev);
    }
    if (plot_data) write_file(*plot_data, plot.str());
    if (common.json) std::cout << j.dump(2) << "\n";
    return 0;
  }
};

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::safe: return 0;
    case Verdict::warning: return 1;
    case Verdict::dangerous: return 2;
  }
  return kExitInternal;
}

void print_scan(std::ostream& out, const ScanReport& r) {
  const char* banner = r.verdict == Verdict::safe      ? "SAFE"
                       : r.verdict == Verdict::warning ? "WARNING"
                                                       : "DANGEROUS";
  out << banner << "  " << r.url << "\n";
  out << "phishing probability " << fixed(r.phishing_probability) << "  (model " << r.model_id << ")\n";
  if (r.degraded) out << "degraded: page not fetched (" << r.fetch_status << "); content features defaulted\n";
  for (const auto& f : r.features) {
    const char* mark = f.status == FeatureStatus::pass ? "pass" : f.status == FeatureStatus::fail ? "FAIL" : "susp";
    std::string id = f.id;
    id.resize(std::max<std::size_t>(id.size(), 24), ' ');
    char line[200];
    std::snprintf(line, sizeof(line), "  [%s] %2zu %s %+d  %s\n", mark, f.index, id.c_str(), static_cast<int>(f.value),
                  std::string(to_string(f.source)).c_str());
    out << line;
  }
  const auto& p = r.evidence_provenance;
  out << "evidence: page " << to_string(p.page) << ", whois " << to_string(p.whois) << ", dns " << to_string(p.dns)
      << ", rank " << to_string(p.rank) << ", index " << to_string(p.index) << ", reports " << to_string(p.reports)
      << "\n";
}

struct ScanCmd {
  Common common;
  ProviderOptions providers;
  PolicyOptions policy;
  std::optional<std::string> model_path;
  std::string url;

  int run() {
    auto s = make_settings(common);
    resolve_seed(s, common);
    const auto scanner = make_scanner(s, common, model_path, providers, policy);
    s.print(std::cerr);
    const auto report = scanner->scan(url);
    if (common.json) {
      std::cout << to_json(report).dump(2) << "\n";
    } else {
      print_scan(std::cout, report);
    }
    return verdict_exit(report.verdict);
  }
};

struct BenchCmd {
  Common common;
  ProviderOptions providers;
  PolicyOptions policy;
  std::optional<std::string> model_path;
  std::optional<std::string> corpus;

  int run() {
    auto s = make_settings(common);
    resolve_seed(s, common);
    const auto corpus_path = s.resolve_optional("corpus", corpus);
    if (!corpus_path) throw UsageError("--corpus is required");
    const auto scanner = make_scanner(s, common, model_path, providers, policy);
    s.print(std::cerr);
    const auto entries = load_corpus(*corpus_path);
    const auto result = field_bench(entries, *scanner);
    if (common.json) {
      auto j = to_json(result);
      j["command"] = "bench";
      j["model_id"] = scanner->model_id();
      j["config"] = s.to_json();
      std::cout << j.dump(2) << "\n";
    } else {
      write_bench_table(std::cout, result);
    }
    return 0;
  }
};

struct ServeCmd {
  Common common;
  ProviderOptions providers;
  PolicyOptions policy;
  std::optional<std::string> model_path;
  std::optional<long long> port;
  std::optional<std::string> host;
  std::optional<std::string> origins;
  std::optional<long long> threads;

  int run() {
    // Signals are handled by a dedicated thread; block them before any other
    // thread exists so every thread inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto s = make_settings(common);
    resolve_seed(s, common);
    ServerConfig config;
    const auto p = s.resolve_int("port", port, 3000);
    if (p < 0 || p > 65535) throw UsageError("--port must be in [0, 65535]");
    config.port = static_cast<int>(p);
    config.host = s.resolve("host", host, "127.0.0.1");
    config.allowed_origins = split_list(s.resolve("origins", origins, "chrome-extension://*,moz-extension://*"));
    const auto t = s.resolve_int("threads", threads, 8);
    if (t < 1) throw UsageError("--threads must be at least 1");
    config.threads = static_cast<std::size_t>(t);

    std::shared_ptr<const Scanner> scanner;
    try {
      scanner = make_scanner(s, common, model_path, providers, policy);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::startup, std::string("cannot start: ") + e.what());
    }
    s.print(std::cerr);

    ScanServer server(scanner, config);
    server.bind();
    std::cerr << "listening on http://" << config.host << ":" << server.port() << " (model " << scanner->model_id()
              << ")\n";
    if (common.json) std::cout << json{{"listening", true}, {"port", server.port()}}.dump() << std::endl;

    std::thread([&server, signals]() {
      int sig = 0;
      sigwait(&signals, &sig);
      std::cerr << "signal " << sig << " received, shutting down\n";
      server.stop();
    }).detach();
    server.run();
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nophish: phishing website detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nophish::kVersion));

  TrainCmd train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and report held-out metrics");
  add_common(train_cmd, train.common);
  add_data(train_cmd, train.data);
  add_model_params(train_cmd, train.model);
  train_cmd->add_option("--algo", train.algo, "rf, knn or svm");
  train_cmd->add_option("--split", train.split, "Training fraction in (0, 1]; 1 trains on everything");
  train_cmd->add_option("--out", train.out, "Model file to write");
  train_cmd->add_option("--trained-on", train.trained_on, "Dataset description stored in the model");

  EvalCmd eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare algorithms across splits and seeds, or evaluate one model");
  add_common(eval_cmd, eval.common);
  add_data(eval_cmd, eval.data);
  add_model_params(eval_cmd, eval.model);
  eval_cmd->add_option("--algos", eval.algos, "Comma-separated algorithms");
  eval_cmd->add_option("--splits", eval.splits, "Comma-separated training fractions");
  eval_cmd->add_option("--seeds", eval.seeds, "Comma-separated seeds (overrides --repeats)");
  eval_cmd->add_option("--repeats", eval.repeats, "Seeds seed, seed+1, ... (default 5)");
  eval_cmd->add_option("--model", eval.model_path, "Evaluate this model on --data instead of sweeping");
  eval_cmd->add_option("--csv", eval.csv, "Write per-cell results as CSV");
  eval_cmd->add_option("--plot-data", eval.plot_data, "Write algo,split,seed,metric,value rows");
  eval_cmd->add_option("--json-out", eval.json_out, "Write the JSON report to a file");

  ImportanceCmd importance;
  auto* importance_cmd = app.add_subcommand("importance", "Rank features by MDI and permutation importance");
  add_common(importance_cmd, importance.common);
  add_data(importance_cmd, importance.data);
  add_model_params(importance_cmd, importance.model);
  importance_cmd->add_option("--model", importance.model_path, "Model file");
  importance_cmd->add_option("--split", importance.split,
                             "Train a forest on this stratified fraction of --data and measure on the rest");
  importance_cmd->add_option("--method", importance.method, "mdi, permutation or both");
  importance_cmd->add_option("--repeats", importance.repeats, "Permutation repeats per feature");
  importance_cmd->add_option("--plot-data", importance.plot_data, "Write method,feature_index,feature_id,mean,std");

  ScanCmd scan;
  auto* scan_cmd = app.add_subcommand("scan", "Scan one URL (exit 0 safe, 1 warning, 2 dangerous)");
  add_common(scan_cmd, scan.common);
  add_providers(scan_cmd, scan.providers);
  add_policy(scan_cmd, scan.policy);
  scan_cmd->add_option("--model", scan.model_path, "Model file");
  scan_cmd->add_option("url", scan.url, "URL to scan")->required();

  BenchCmd bench;
  auto* bench_cmd = app.add_subcommand("bench", "Scan a labelled URL corpus and print the confusion matrix");
  add_common(bench_cmd, bench.common);
  add_providers(bench_cmd, bench.providers);
  add_policy(bench_cmd, bench.policy);
  bench_cmd->add_option("--model", bench.model_path, "Model file");
  bench_cmd->add_option("--corpus", bench.corpus, "CSV url,label[,fixture_path]");

  ServeCmd serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP scan service");
  add_common(serve_cmd, serve.common);
  add_providers(serve_cmd, serve.providers);
  add_policy(serve_cmd, serve.policy);
  serve_cmd->add_option("--model", serve.model_path, "Model file");
  serve_cmd->add_option("--port", serve.port, "Listening port (0: any free port)");
  serve_cmd->add_option("--host", serve.host, "Listening address");
  serve_cmd->add_option("--origins", serve.origins, "Comma-separated CORS origins");
  serve_cmd->add_option("--threads", serve.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return train.run();
    if (*eval_cmd) return eval.run();
    if (*importance_cmd) return importance.run();
    if (*scan_cmd) return scan.run();
    if (*bench_cmd) return bench.run();
    if (*serve_cmd) return serve.run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nophish::Error& e) {
    std::cerr << "error [" << nophish::to_string(e.code()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

#include "nophish/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "nophish/error.hpp"
#include "text.hpp"

namespace nophish {

void ConfusionMatrix::add(Label truth, Label predicted) noexcept {
  const bool actual_positive = truth == Label::phishing;
  const bool predicted_positive = predicted == Label::phishing;
  if (actual_positive) {
    ++(predicted_positive ? tp : fn);
  } else {
    ++(predicted_positive ? fp : tn);
  }
}

Metrics metrics(const ConfusionMatrix& cm) noexcept {
  const auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(cm.tp + cm.tn, cm.total()), ratio(cm.tp, cm.tp + cm.fp), ratio(cm.tp, cm.tp + cm.fn)};
}

ConfusionMatrix confusion(const TrainedModel& model, const LabeledDataset& test) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < test.size(); ++i) cm.add(test.label(i), model.predict(test.row(i)).label);
  return cm;
}

EvalReport evaluate(const TrainedModel& model, const LabeledDataset& test, const SplitSpec& split,
                    std::size_t train_rows) {
  EvalReport r;
  r.algorithm = model.algorithm();
  r.split = split;
  r.train_rows = train_rows;
  r.test_rows = test.size();
  r.confusion = confusion(model, test);
  r.phishing_positive = metrics(r.confusion);
  r.legitimate_positive = metrics(r.confusion.legitimate_positive());
  return r;
}

std::vector<std::string> metric_names() {
  return {"accuracy", "precision", "recall", "precision_legit", "recall_legit"};
}

std::optional<double> metric_value(const EvalReport& report, std::string_view name) {
  if (name == "accuracy") return report.phishing_positive.accuracy;
  if (name == "precision") return report.phishing_positive.precision;
  if (name == "recall") return report.phishing_positive.recall;
  if (name == "precision_legit") return report.legitimate_positive.precision;
  if (name == "recall_legit") return report.legitimate_positive.recall;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

Comparison compare_algorithms(const LabeledDataset& data, const CompareOptions& options) {
  if (options.algorithms.empty() || options.splits.empty() || options.seeds.empty()) {
    throw ConfigError("comparison needs at least one algorithm, split and seed");
  }
  struct SplitKey {
    double fraction;
    std::uint64_t seed;
    TrainTestSplit parts;
  };
  std::vector<SplitKey> splits;
  for (const double f : options.splits) {
    for (const auto seed : options.seeds) {
      splits.push_back({f, seed, split(data, SplitSpec{f, seed, options.stratified})});
    }
  }
  struct Cell {
    Algorithm algorithm;
    const SplitKey* split;
  };
  std::vector<Cell> cells;
  for (const auto algo : options.algorithms) {
    for (const auto& s : splits) cells.push_back({algo, &s});
  }

  std::vector<EvalReport> reports(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        const auto& cell = cells[i];
        const auto& parts = cell.split->parts;
        if (options.observer) {
          options.observer(CellAudit{cell.algorithm, cell.split->fraction, cell.split->seed, parts.train.row_ids(),
                                     parts.test.row_ids()});
        }
        auto params = options.params;
        params.forest.threads = 1;
        const auto model = train_model(cell.algorithm, parts.train, params, cell.split->seed);
        reports[i] = evaluate(model, parts.test, SplitSpec{cell.split->fraction, cell.split->seed, options.stratified},
                              parts.train.size());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    if (a.split.train_fraction != b.split.train_fraction) return a.split.train_fraction < b.split.train_fraction;
    return a.split.seed < b.split.seed;
  });

  Comparison out;
  out.reports = std::move(reports);
  for (const auto algo : options.algorithms) {
    for (const double f : options.splits) {
      for (const auto& name : metric_names()) {
        std::vector<double> values;
        for (const auto& r : out.reports) {
          if (r.algorithm != algo || r.split.train_fraction != f) continue;
          if (auto v = metric_value(r, name)) values.push_back(*v);
        }
        AggregateRow row{algo, f, name, 0.0, 0.0, values.size()};
        if (!values.empty()) {
          double sum = 0.0;
          for (const double v : values) sum += v;
          row.mean = sum / static_cast<double>(values.size());
          double var = 0.0;
          for (const double v : values) var += (v - row.mean) * (v - row.mean);
          row.std = std::sqrt(var / static_cast<double>(values.size()));
        }
        out.aggregates.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(out.aggregates.begin(), out.aggregates.end(), [](const AggregateRow& a, const AggregateRow& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    if (a.train_fraction != b.train_fraction) return a.train_fraction < b.train_fraction;
    return false;
  });
  return out;
}

namespace {

std::string fixed(std::optional<double> v, int digits = 3) {
  if (!v) return "n/a";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, *v);
  return buffer;
}

std::string split_label(double fraction) {
  const int train = static_cast<int>(std::lround(fraction * 100));
  return std::to_string(train) + "/" + std::to_string(100 - train);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

nlohmann::json optional_number(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

void write_table(std::ostream& out, const Comparison& c) {
  out << "algo  split  seed  accuracy  precision  recall     TN     FP     FN     TP  prec(L+)  rec(L+)\n";
  for (const auto& r : c.reports) {
    out << pad(std::string(to_string(r.algorithm)), 4) << "  " << pad(split_label(r.split.train_fraction), 5) << "  "
        << pad(std::to_string(r.split.seed), 4) << "  " << pad(fixed(r.phishing_positive.accuracy), 8) << "  "
        << pad(fixed(r.phishing_positive.precision), 9) << "  " << pad(fixed(r.phishing_positive.recall), 6) << "  "
        << pad(std::to_string(r.confusion.tn), 5) << "  " << pad(std::to_string(r.confusion.fp), 5) << "  "
        << pad(std::to_string(r.confusion.fn), 5) << "  " << pad(std::to_string(r.confusion.tp), 5) << "  "
        << pad(fixed(r.legitimate_positive.precision), 8) << "  " << pad(fixed(r.legitimate_positive.recall), 7)
        << "\n";
  }
  out << "\nmean +/- std over seeds\n";
  out << "algo  split  metric            mean     std\n";
  for (const auto& a : c.aggregates) {
    std::string metric = a.metric;
    metric.resize(std::max<std::size_t>(metric.size(), 16), ' ');
    out << pad(std::string(to_string(a.algorithm)), 4) << "  " << pad(split_label(a.train_fraction), 5) << "  "
        << metric << "  " << fixed(a.mean) << "  " << fixed(a.std) << "\n";
  }
}

void write_csv(std::ostream& out, const Comparison& c) {
  out << "algo,split,seed,train_rows,test_rows,tn,fp,fn,tp";
  for (const auto& name : metric_names()) out << "," << name;
  out << "\n";
  for (const auto& r : c.reports) {
    out << to_string(r.algorithm) << "," << fixed(r.split.train_fraction, 2) << "," << r.split.seed << ","
        << r.train_rows << "," << r.test_rows << "," << r.confusion.tn << "," << r.confusion.fp << ","
        << r.confusion.fn << "," << r.confusion.tp;
    for (const auto& name : metric_names()) {
      const auto v = metric_value(r, name);
      out << "," << (v ? fixed(v, 6) : std::string());
    }
    out << "\n";
  }
}

void write_plot_data(std::ostream& out, const Comparison& c) {
  out << "algo,split,seed,metric,value\n";
  for (const auto& r : c.reports) {
    for (const auto& name : metric_names()) {
      const auto v = metric_value(r, name);
      if (!v) continue;
      out << to_string(r.algorithm) << "," << fixed(r.split.train_fraction, 2) << "," << r.split.seed << "," << name
          << "," << fixed(v, 6) << "\n";
    }
  }
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}, {"tp", cm.tp}};
}

nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", optional_number(m.accuracy)},
          {"precision", optional_number(m.precision)},
          {"recall", optional_number(m.recall)}};
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"algorithm", std::string(to_string(r.algorithm))},
          {"split", {{"train_fraction", r.split.train_fraction}, {"seed", r.split.seed}, {"stratified", r.split.stratified}}},
          {"train_rows", r.train_rows},
          {"test_rows", r.test_rows},
          {"confusion", to_json(r.confusion)},
          {"phishing_positive", to_json(r.phishing_positive)},
          {"legitimate_positive", to_json(r.legitimate_positive)}};
}

nlohmann::json to_json(const Comparison& c) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : c.reports) reports.push_back(to_json(r));
  nlohmann::json aggregates = nlohmann::json::array();
  for (const auto& a : c.aggregates) {
    aggregates.push_back({{"algorithm", std::string(to_string(a.algorithm))},
                          {"train_fraction", a.train_fraction},
                          {"metric", a.metric},
                          {"mean", a.mean},
                          {"std", a.std},
                          {"n", a.n}});
  }
  return {{"reports", std::move(reports)}, {"aggregates", std::move(aggregates)}};
}

// --- field bench -------------------------------------------------------------

std::vector<CorpusEntry> parse_corpus(std::istream& in, std::string_view source, const std::filesystem::path& base_dir) {
  std::vector<CorpusEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = text::split(body, ',');
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(source, line_no, "expected url,label[,fixture_path]");
    }
    const auto label_text = text::to_lower(text::trim(fields[1]));
    if (entries.empty() && label_text == "label") continue;
    CorpusEntry e;
    e.url = std::string(text::trim(fields[0]));
    if (e.url.empty()) throw ParseError(source, line_no, "empty url");
    if (label_text == "phishing" || label_text == "-1") {
      e.label = Label::phishing;
    } else if (label_text == "legitimate" || label_text == "1" || label_text == "+1") {
      e.label = Label::legitimate;
    } else {
      throw ParseError(source, line_no, "bad label '" + label_text + "'");
    }
    if (fields.size() == 3 && !text::trim(fields[2]).empty()) {
      std::filesystem::path p(std::string(text::trim(fields[2])));
      e.fixture_path = p.is_absolute() ? p : base_dir / p;
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open corpus " + path.string());
  return parse_corpus(in, path.string(), path.parent_path());
}

bool is_positive(Verdict v) noexcept { return v == Verdict::dangerous || v == Verdict::warning; }

BenchResult field_bench(std::span<const CorpusEntry> corpus, const Scanner& scanner) {
  BenchResult result;
  for (const auto& entry : corpus) {
    BenchEntry be;
    be.entry = entry;
    try {
      if (entry.fixture_path) {
        std::ifstream in(*entry.fixture_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::io, "cannot open fixture " + entry.fixture_path->string());
        std::ostringstream html;
        html << in.rdbuf();
        const Url url = require_url(entry.url);
        PageArtifacts page;
        page.final_url = url;
        page.raw_html = html.str();
        page.redirect_chain = {url.normalized()};
        page.status = FetchStatus::success(200);
        be.report = scanner.scan_with_page(entry.url, std::move(page));
      } else {
        be.report = scanner.scan(entry.url);
      }
      if (be.report->degraded) {
        be.note = "page not fetched: " + be.report->fetch_status;
      } else {
        be.scorable = true;
      }
    } catch (const InvalidUrl& e) {
      be.note = std::string("invalid url: ") + e.what();
    }
    if (be.scorable) {
      result.confusion.add(entry.label, is_positive(be.report->verdict) ? Label::phishing : Label::legitimate);
    } else {
      ++result.unscorable;
    }
    result.entries.push_back(std::move(be));
  }
  return result;
}

void write_bench_table(std::ostream& out, const BenchResult& r) {
  out << "verdict     p      label       url\n";
  for (const auto& e : r.entries) {
    std::string verdict = e.report ? std::string(to_string(e.report->verdict)) : "-";
    verdict.resize(std::max<std::size_t>(verdict.size(), 10), ' ');
    std::string label(to_string(e.entry.label));
    label.resize(std::max<std::size_t>(label.size(), 10), ' ');
    out << verdict << "  " << (e.report ? fixed(e.report->phishing_probability, 2) : std::string("   -")) << "  "
        << label << "  " << e.entry.url;
    if (!e.scorable) out << "  [excluded: " << e.note << "]";
    out << "\n";
  }
  const auto& cm = r.confusion;
  const auto m = metrics(cm);
  out << "\n                 predicted phishing  predicted legitimate\n";
  out << "actual phishing  " << pad("TP " + std::to_string(cm.tp), 18) << "  " << pad("FN " + std::to_string(cm.fn), 20)
      << "\n";
  out << "actual legit     " << pad("FP " + std::to_string(cm.fp), 18) << "  " << pad("TN " + std::to_string(cm.tn), 20)
      << "\n";
  out << "\naccuracy " << fixed(m.accuracy) << "  precision " << fixed(m.precision) << "  recall " << fixed(m.recall)
      << "  excluded " << r.unscorable << "\n";
}

nlohmann::json to_json(const BenchResult& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json j{{"url", e.entry.url},
                     {"label", std::string(to_string(e.entry.label))},
                     {"scorable", e.scorable},
                     {"note", e.note}};
    j["report"] = e.report ? to_json_stable(*e.report) : nlohmann::json(nullptr);
    entries.push_back(std::move(j));
  }
  return {{"confusion", to_json(r.confusion)},
          {"metrics", to_json(metrics(r.confusion))},
          {"unscorable", r.unscorable},
          {"entries", std::move(entries)}};
}

}  // namespace nophish

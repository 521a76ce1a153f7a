#include <doctest.h>

#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "nophish/error.hpp"
#include "nophish/evaluation.hpp"
#include "test_support.hpp"

using namespace nophish;

TEST_CASE("confusion matrix orientation") {
  ConfusionMatrix cm;
  cm.add(Label::phishing, Label::phishing);
  cm.add(Label::phishing, Label::legitimate);
  cm.add(Label::legitimate, Label::phishing);
  cm.add(Label::legitimate, Label::legitimate);
  cm.add(Label::legitimate, Label::legitimate);
  CHECK(cm == ConfusionMatrix{2, 1, 1, 1});
  CHECK(cm.legitimate_positive() == ConfusionMatrix{1, 1, 1, 2});
}

TEST_CASE("metrics agree with direct formulas on 10^4 random matrices") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    // Small counts on some draws.
    const std::uint64_t scale = rng.below(3) == 0 ? 3 : 5000;
    const ConfusionMatrix cm{rng.below(scale), rng.below(scale), rng.below(scale), rng.below(scale)};
    const double tn = static_cast<double>(cm.tn), fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn),
                 tp = static_cast<double>(cm.tp);
    const auto m = metrics(cm);
    const double total = tn + fp + fn + tp;
    if (total == 0) {
      REQUIRE_FALSE(m.accuracy);
    } else {
      REQUIRE(*m.accuracy == doctest::Approx((tp + tn) / total));
      REQUIRE(*m.accuracy >= 0.0);
      REQUIRE(*m.accuracy <= 1.0);
    }
    if (tp + fp == 0) {
      REQUIRE_FALSE(m.precision);
    } else {
      REQUIRE(*m.precision == doctest::Approx(tp / (tp + fp)));
    }
    if (tp + fn == 0) {
      REQUIRE_FALSE(m.recall);
    } else {
      REQUIRE(*m.recall == doctest::Approx(tp / (tp + fn)));
    }
    const auto legit = metrics(cm.legitimate_positive());
    if (tn + fn > 0) REQUIRE(*legit.precision == doctest::Approx(tn / (tn + fn)));
    if (tn + fp > 0) REQUIRE(*legit.recall == doctest::Approx(tn / (tn + fp)));
    if (total > 0) REQUIRE(*legit.accuracy == *m.accuracy);
  }
}

TEST_CASE("comparison uses one split per (fraction, seed) and never leaks rows") {
  const auto ds = test::random_dataset(600, 8, 0.44);
  CompareOptions options;
  options.params.forest.trees = 5;
  options.seeds = {0, 1};
  options.splits = {0.5, 0.9};
  std::mutex mu;
  std::map<std::pair<double, std::uint64_t>, std::vector<std::uint32_t>> seen;
  std::size_t cells = 0;
  bool leak = false;
  bool mismatch = false;
  options.observer = [&](const CellAudit& a) {
    std::set<std::uint32_t> train(a.train_ids.begin(), a.train_ids.end());
    std::vector<std::uint32_t> ids(a.train_ids.begin(), a.train_ids.end());
    std::lock_guard lock(mu);
    ++cells;
    for (const auto id : a.test_ids) leak = leak || train.count(id) > 0;
    auto [it, inserted] = seen.try_emplace({a.train_fraction, a.seed}, ids);
    if (!inserted && it->second != ids) mismatch = true;
  };
  const auto result = compare_algorithms(ds, options);
  CHECK(cells == 3 * 2 * 2);
  CHECK_FALSE(leak);
  CHECK_FALSE(mismatch);
  CHECK(result.reports.size() == 12);
  CHECK(result.aggregates.size() == 3 * 2 * metric_names().size());
  for (const auto& r : result.reports) CHECK(r.train_rows + r.test_rows == ds.size());
}

TEST_CASE("comparison output is identical across runs and thread counts") {
  const auto ds = test::random_dataset(300, 9);
  CompareOptions options;
  options.params.forest.trees = 4;
  options.seeds = {3, 4};
  const auto render = [&](std::size_t threads) {
    options.threads = threads;
    const auto c = compare_algorithms(ds, options);
    std::ostringstream out;
    write_csv(out, c);
    write_plot_data(out, c);
    write_table(out, c);
    out << to_json(c).dump();
    return out.str();
  };
  const auto first = render(1);
  CHECK(render(1) == first);
  CHECK(render(3) == first);
}

TEST_CASE("aggregates are population mean and deviation over seeds") {
  const auto ds = test::random_dataset(300, 10);
  CompareOptions options;
  options.algorithms = {Algorithm::knn};
  options.splits = {0.7};
  options.seeds = {0, 1, 2};
  const auto c = compare_algorithms(ds, options);
  std::vector<double> acc;
  for (const auto& r : c.reports) acc.push_back(*metric_value(r, "accuracy"));
  REQUIRE(acc.size() == 3);
  const double mean = (acc[0] + acc[1] + acc[2]) / 3;
  double var = 0;
  for (const double a : acc) var += (a - mean) * (a - mean);
  for (const auto& row : c.aggregates) {
    if (row.metric != "accuracy") continue;
    CHECK(row.mean == doctest::Approx(mean));
    CHECK(row.std == doctest::Approx(std::sqrt(var / 3)));
    CHECK(row.n == 3);
  }
}

TEST_CASE("corpus parsing") {
  std::istringstream in("url,label\nhttp://a.test/,phishing\nhttps://b.test/,1\nhttp://c.test/,-1,pages/c.html\n\n");
  const auto entries = parse_corpus(in, "mem", "/base");
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].label == Label::phishing);
  CHECK(entries[1].label == Label::legitimate);
  CHECK(entries[2].fixture_path == std::filesystem::path("/base/pages/c.html"));
  std::istringstream bad("http://a.test/,maybe\n");
  CHECK_THROWS_AS(parse_corpus(bad, "mem"), Error);
}

TEST_CASE("field bench over the bundled fixtures") {
  const auto corpus = load_corpus(test::fixtures_dir() / "corpus.csv");
  CHECK(std::count_if(corpus.begin(), corpus.end(), [](const auto& e) { return e.label == Label::phishing; }) == 14);
  CHECK(std::count_if(corpus.begin(), corpus.end(), [](const auto& e) { return e.label == Label::legitimate; }) == 13);
  const auto result = field_bench(corpus, *test::fixture_scanner());
  CHECK(result.unscorable == 0);
  CHECK(result.confusion.fn == 0);
  CHECK(result.confusion.fp <= 3);
  CHECK(result.confusion.total() == 27);
  CHECK(is_positive(Verdict::warning));
  CHECK(is_positive(Verdict::dangerous));
  CHECK_FALSE(is_positive(Verdict::safe));
}

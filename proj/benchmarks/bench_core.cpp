#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nophish/dataset.hpp"
#include "nophish/features.hpp"
#include "nophish/html.hpp"
#include "nophish/learn/forest.hpp"
#include "nophish/learn/knn.hpp"
#include "nophish/learn/svm.hpp"
#include "nophish/public_suffix.hpp"
#include "nophish/rng.hpp"

namespace {

const std::filesystem::path kDataDir = NOPHISH_BENCH_DATA_DIR;

// Rows where the label leans on a handful of features, so trees grow to a
// realistic size.
nophish::LabeledDataset make_rows(std::size_t rows, std::uint64_t seed) {
  nophish::Rng rng(seed);
  nophish::LabeledDataset ds;
  for (std::size_t i = 0; i < rows; ++i) {
    const bool phishing = rng.uniform() < 0.45;
    nophish::FeatureValues v{};
    for (std::size_t f = 0; f < nophish::kFeatureCount; ++f) {
      const double lean = f % 3 == 0 ? 0.7 : 0.55;
      const bool bad = rng.uniform() < (phishing ? lean : 1.0 - lean);
      v[f] = bad ? -1 : (rng.uniform() < 0.2 ? 0 : 1);
    }
    ds.append(v, phishing ? nophish::Label::phishing : nophish::Label::legitimate, static_cast<std::uint32_t>(i));
  }
  return ds;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const std::vector<std::string>& fixture_pages() {
  static const std::vector<std::string> pages = [] {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(kDataDir / "fixtures" / "pages")) out.push_back(read_file(e.path()));
    return out;
  }();
  return pages;
}

void forest_train(benchmark::State& state) {
  const auto data = make_rows(static_cast<std::size_t>(state.range(0)), 1);
  nophish::ForestParams params;
  params.trees = static_cast<std::size_t>(state.range(1));
  params.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(nophish::RandomForest::fit(data, params));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(forest_train)->Args({2000, 10})->Args({11055, 10})->Args({11055, 100})->Unit(benchmark::kMillisecond);

void forest_predict(benchmark::State& state) {
  const auto data = make_rows(11055, 2);
  nophish::ForestParams params;
  params.threads = 1;
  const auto forest = nophish::RandomForest::fit(data, params);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forest.predict(data.row(i)));
    i = (i + 1) % data.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(forest_predict);

void knn_predict(benchmark::State& state) {
  const auto data = make_rows(static_cast<std::size_t>(state.range(0)), 3);
  const auto model = nophish::KnnModel::fit(data, nophish::KnnParams{});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(data.row(i)));
    i = (i + 1) % data.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(knn_predict)->Arg(1000)->Arg(10000);

void svm_train(benchmark::State& state) {
  const auto data = make_rows(11055, 4);
  for (auto _ : state) benchmark::DoNotOptimize(nophish::SvmModel::fit(data, nophish::SvmParams{}));
}
BENCHMARK(svm_train)->Unit(benchmark::kMillisecond);

void html_parse(benchmark::State& state) {
  const auto& pages = fixture_pages();
  std::size_t bytes = 0;
  for (const auto& p : pages) bytes += p.size();
  for (auto _ : state) {
    for (const auto& p : pages) benchmark::DoNotOptimize(nophish::parse_html(p));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(html_parse);

void psl_registered_domain(benchmark::State& state) {
  const auto psl = nophish::PublicSuffixList::load(kDataDir / "public_suffix_list.dat");
  const std::vector<std::string> hosts{"www.example.com",       "news.bbc.co.uk",         "a.b.c.d.example.org",
                                       "docs-share-view.web.app", "secure.login.kawasaki.jp", "city.kawasaki.jp",
                                       "192.0.2.44",            "x.y.z.blogspot.com"};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psl.registered_domain(hosts[i]));
    i = (i + 1) % hosts.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(psl_registered_domain);

void extract_all(benchmark::State& state) {
  const auto extractor = nophish::FeatureExtractor::from_data_dir(kDataDir);
  const auto& pages = fixture_pages();
  const std::string url = "http://www.amazon.com.signin-update.net/ap/signin?openid.pape.max_auth_age=0";
  auto page = nophish::PageArtifacts::empty_for(*nophish::parse_url(url));
  page.status = nophish::FetchStatus::success(200);
  nophish::ExternalEvidence evidence;
  std::size_t i = 0;
  for (auto _ : state) {
    page.raw_html = pages[i];
    benchmark::DoNotOptimize(extractor.extract_all(url, page, evidence));
    i = (i + 1) % pages.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(extract_all);

}  // namespace

BENCHMARK_MAIN();

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "nophish/error.hpp"
#include "nophish/learn/forest.hpp"
#include "nophish/learn/importance.hpp"
#include "nophish/learn/knn.hpp"
#include "nophish/learn/model.hpp"
#include "nophish/learn/svm.hpp"
#include "nophish/learn/tree.hpp"
#include "test_support.hpp"

using namespace nophish;

namespace {

// --- greedy CART written from the definition, for small inputs only ---------

struct OracleNode {
  int feature = -1;
  double threshold = 0;
  int phishing = 0;
  int legitimate = 0;
  int left = -1;
  int right = -1;
};

double oracle_gini(int p, int l) {
  const int n = p + l;
  if (n == 0) return 0.0;
  const double a = static_cast<double>(p) / n;
  const double b = static_cast<double>(l) / n;
  return 1.0 - a * a - b * b;
}

int oracle_grow(const LabeledDataset& ds, const std::vector<std::size_t>& rows, std::size_t depth,
                std::size_t max_depth, std::vector<OracleNode>& out) {
  OracleNode node;
  for (const auto r : rows) (ds.label(r) == Label::phishing ? node.phishing : node.legitimate)++;
  const int index = static_cast<int>(out.size());
  out.push_back(node);
  if (node.phishing == 0 || node.legitimate == 0) return index;
  if (max_depth != 0 && depth >= max_depth) return index;

  const double n = static_cast<double>(rows.size());
  const double parent = oracle_gini(node.phishing, node.legitimate);
  int best_f = -1;
  double best_t = 0;
  double best_gain = -1;
  for (int f = 0; f < static_cast<int>(kFeatureCount); ++f) {
    for (const double t : {-0.5, 0.5}) {
      int lp = 0, ll = 0, rp = 0, rl = 0;
      for (const auto r : rows) {
        const bool left = ds.at(r, static_cast<std::size_t>(f)) <= t;
        const bool phish = ds.label(r) == Label::phishing;
        if (left) {
          (phish ? lp : ll)++;
        } else {
          (phish ? rp : rl)++;
        }
      }
      if (lp + ll == 0 || rp + rl == 0) continue;
      double gain = parent - ((lp + ll) / n) * oracle_gini(lp, ll) - ((rp + rl) / n) * oracle_gini(rp, rl);
      gain = std::max(gain, 0.0);
      // Iteration order is (feature, threshold) ascending, so a strict
      // improvement beyond the tolerance is the only way to replace.
      if (best_f < 0 || gain > best_gain + 1e-12) {
        best_f = f;
        best_t = t;
        best_gain = gain;
      }
    }
  }
  if (best_f < 0) return index;
  std::vector<std::size_t> left_rows, right_rows;
  for (const auto r : rows) {
    (ds.at(r, static_cast<std::size_t>(best_f)) <= best_t ? left_rows : right_rows).push_back(r);
  }
  out[static_cast<std::size_t>(index)].feature = best_f;
  out[static_cast<std::size_t>(index)].threshold = best_t;
  const int l = oracle_grow(ds, left_rows, depth + 1, max_depth, out);
  const int r = oracle_grow(ds, right_rows, depth + 1, max_depth, out);
  out[static_cast<std::size_t>(index)].left = l;
  out[static_cast<std::size_t>(index)].right = r;
  return index;
}

Label oracle_predict(const std::vector<OracleNode>& nodes, std::span<const Ternary> x) {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  const auto& leaf = nodes[static_cast<std::size_t>(i)];
  return leaf.phishing >= leaf.legitimate ? Label::phishing : Label::legitimate;
}

// Dataset where only `active` features vary; all others are 0.
LabeledDataset small_dataset(Rng& rng, std::size_t rows, const std::vector<std::size_t>& active) {
  LabeledDataset ds;
  for (std::size_t i = 0; i < rows; ++i) {
    FeatureValues v{};
    for (const auto f : active) v[f] = static_cast<Ternary>(static_cast<int>(rng.below(3)) - 1);
    ds.append(v, rng.below(2) ? Label::phishing : Label::legitimate);
  }
  return ds;
}

// --- exhaustive kNN ----------------------------------------------------------

Prediction oracle_knn(const LabeledDataset& train, std::size_t k, std::span<const Ternary> x) {
  std::vector<std::pair<int, std::size_t>> all;
  for (std::size_t i = 0; i < train.size(); ++i) {
    int d = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const int diff = train.at(i, f) - x[f];
      d += diff * diff;
    }
    all.emplace_back(d, i);
  }
  std::sort(all.begin(), all.end());
  int phish = 0;
  for (std::size_t j = 0; j < k; ++j) phish += train.label(all[j].second) == Label::phishing ? 1 : 0;
  const int legit = static_cast<int>(k) - phish;
  Prediction p;
  p.phishing_probability = static_cast<double>(phish) / static_cast<double>(k);
  if (phish != legit) {
    p.label = phish > legit ? Label::phishing : Label::legitimate;
  } else {
    p.label = train.label(all[0].second);
  }
  return p;
}

ForestParams small_forest(std::size_t trees, std::uint64_t seed) {
  ForestParams p;
  p.trees = trees;
  p.seed = seed;
  p.threads = 1;
  return p;
}

}  // namespace

TEST_CASE("gini impurity") {
  CHECK(gini(0, 0) == 0.0);
  CHECK(gini(5, 0) == 0.0);
  CHECK(gini(5, 5) == doctest::Approx(0.5));
  CHECK(gini(1, 3) == doctest::Approx(0.375));
}

TEST_CASE("tree equals the brute-force greedy oracle on small inputs") {
  Rng rng(99);
  int compared = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t rows = 1 + rng.below(8);
    std::vector<std::size_t> active;
    const std::size_t n_active = 1 + rng.below(3);
    while (active.size() < n_active) {
      const auto f = rng.below(kFeatureCount);
      if (std::find(active.begin(), active.end(), f) == active.end()) active.push_back(f);
    }
    const auto ds = small_dataset(rng, rows, active);
    const std::size_t depth = 1 + rng.below(2);
    TreeParams params;
    params.max_depth = depth;
    const auto tree = DecisionTree::fit(ds, params, trial);

    std::vector<OracleNode> oracle;
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    oracle_grow(ds, all, 0, depth, oracle);

    REQUIRE(tree.nodes().size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      const auto& a = tree.nodes()[i];
      const auto& b = oracle[i];
      REQUIRE(a.feature == b.feature);
      REQUIRE(a.left == b.left);
      REQUIRE(a.right == b.right);
      REQUIRE(a.phishing == static_cast<std::uint32_t>(b.phishing));
      REQUIRE(a.legitimate == static_cast<std::uint32_t>(b.legitimate));
      if (b.feature >= 0) REQUIRE(a.threshold == b.threshold);
    }
    // Every combination of the active features.
    FeatureValues x{};
    for (int code = 0; code < 27; ++code) {
      int c = code;
      for (const auto f : active) {
        x[f] = static_cast<Ternary>(c % 3 - 1);
        c /= 3;
      }
      REQUIRE(tree.predict(x) == oracle_predict(oracle, x));
    }
    ++compared;
  }
  CHECK(compared == 3000);
}

TEST_CASE("tree honours depth and leaf-size limits") {
  const auto ds = test::random_dataset(400, 5);
  TreeParams p;
  p.max_depth = 3;
  CHECK(DecisionTree::fit(ds, p).depth() <= 3);
  p.max_depth = 0;
  p.min_samples_leaf = 20;
  const auto tree = DecisionTree::fit(ds, p);
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) CHECK(n.samples() >= 20);
  }
}

TEST_CASE("tree rebuild rejects malformed node graphs") {
  const auto ds = test::random_dataset(60, 2);
  const auto tree = DecisionTree::fit(ds);
  CHECK(DecisionTree::from_nodes(tree.nodes()) == tree);
  auto nodes = tree.nodes();
  REQUIRE(nodes.size() > 2);
  nodes[0].left = 0;
  CHECK_THROWS_AS(DecisionTree::from_nodes(nodes), Error);
  nodes = tree.nodes();
  nodes[0].phishing += 1;
  CHECK_THROWS_AS(DecisionTree::from_nodes(nodes), Error);
}

TEST_CASE("forest with one tree and no bootstrap equals a single tree") {
  const auto ds = test::random_dataset(500, 11, 0.45);
  ForestParams p = small_forest(1, 123);
  p.bootstrap = false;
  p.max_features = kFeatureCount;
  const auto forest = RandomForest::fit(ds, p);
  const auto tree = DecisionTree::fit(ds, TreeParams{0, 1, kFeatureCount}, 0);
  REQUIRE(forest.trees().size() == 1);
  CHECK(forest.trees()[0] == tree);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto x = test::random_values(rng);
    const auto pred = forest.predict(x);
    REQUIRE(pred.label == tree.predict(x));
    REQUIRE(pred.phishing_probability == (tree.predict(x) == Label::phishing ? 1.0 : 0.0));
  }
  CHECK_FALSE(forest.oob_score().has_value());
}

TEST_CASE("forest result does not depend on the thread count") {
  const auto ds = test::random_dataset(300, 12);
  auto p = small_forest(16, 7);
  const auto one = RandomForest::fit(ds, p);
  p.threads = 4;
  const auto four = RandomForest::fit(ds, p);
  CHECK(one == four);
  REQUIRE(one.oob_score().has_value());
  CHECK(*one.oob_score() >= 0.0);
  CHECK(*one.oob_score() <= 1.0);
}

TEST_CASE("forest probability is the phishing vote share") {
  const auto ds = test::random_dataset(200, 13);
  const auto forest = RandomForest::fit(ds, small_forest(9, 1));
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto x = test::random_values(rng);
    int votes = 0;
    for (const auto& t : forest.trees()) votes += t.predict(x) == Label::phishing ? 1 : 0;
    const auto pred = forest.predict(x);
    CHECK(pred.phishing_probability == doctest::Approx(votes / 9.0));
    CHECK((pred.label == Label::phishing) == (pred.phishing_probability >= 0.5));
  }
}

TEST_CASE("MDI matches a direct computation, sums to one and ignores constant columns") {
  auto ds = test::random_dataset(400, 21, 0.4);
  const std::vector<Ternary> zeros(ds.size(), 0);
  ds.set_column(4, zeros);
  ds.set_column(17, zeros);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto forest = RandomForest::fit(ds, small_forest(20, seed));
    const auto& mdi = forest.mdi();

    std::array<double, kFeatureCount> expected{};
    for (const auto& tree : forest.trees()) {
      const double root = tree.nodes()[0].samples();
      for (const auto& n : tree.nodes()) {
        if (!n.is_leaf()) expected[static_cast<std::size_t>(n.feature)] += n.samples() / root * n.impurity_decrease;
      }
    }
    const double total = std::accumulate(expected.begin(), expected.end(), 0.0);
    double sum = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      CHECK(mdi[f] == doctest::Approx(expected[f] / total).epsilon(1e-12));
      sum += mdi[f];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(mdi[4] == 0.0);
    CHECK(mdi[17] == 0.0);
  }
}

TEST_CASE("MDI of split-free trees is uniform") {
  LabeledDataset ds;
  FeatureValues v{};
  ds.append(v, Label::phishing);
  ds.append(v, Label::phishing);
  const auto forest = RandomForest::fit(ds, small_forest(3, 0));
  for (const double m : forest.mdi()) CHECK(m == doctest::Approx(1.0 / kFeatureCount));
}

TEST_CASE("a single decisive feature takes all of the MDI") {
  LabeledDataset ds;
  for (int i = 0; i < 40; ++i) {
    FeatureValues v{};
    v[11] = i % 2 ? 1 : -1;
    ds.append(v, i % 2 ? Label::legitimate : Label::phishing);
  }
  const auto forest = RandomForest::fit(ds, small_forest(10, 3));
  CHECK(forest.mdi()[11] == doctest::Approx(1.0));
}

TEST_CASE("kNN equals the exhaustive oracle, including distance and vote ties") {
  Rng rng(77);
  std::size_t tied_instances = 0;
  for (int instance = 0; instance < 200; ++instance) {
    // Few active features.
    std::vector<std::size_t> active;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (rng.below(7) == 0) active.push_back(f);
    }
    if (active.empty()) active.push_back(rng.below(kFeatureCount));
    const std::size_t rows = 1 + rng.below(40);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(rows, 8));
    const auto train = small_dataset(rng, rows, active);
    const auto model = KnnModel::fit(train, KnnParams{k});
    bool tie_seen = false;
    for (int q = 0; q < 20; ++q) {
      FeatureValues x{};
      for (const auto f : active) x[f] = static_cast<Ternary>(static_cast<int>(rng.below(3)) - 1);
      const auto got = model.predict(x);
      const auto want = oracle_knn(train, k, x);
      REQUIRE(got.label == want.label);
      REQUIRE(got.phishing_probability == doctest::Approx(want.phishing_probability));
      tie_seen = tie_seen || (k % 2 == 0 && want.phishing_probability == 0.5);
    }
    if (tie_seen) ++tied_instances;
  }
  CHECK(tied_instances > 10);
}

TEST_CASE("kNN neighbours are ordered by distance then row index") {
  LabeledDataset train;
  FeatureValues a{}, b{};
  b[0] = 1;
  train.append(b, Label::legitimate);
  train.append(a, Label::phishing);
  train.append(a, Label::legitimate);
  const auto model = KnnModel::fit(train, KnnParams{2});
  CHECK(model.neighbors(a) == std::vector<std::size_t>{1, 2});
  // 1 vs 1 vote: the nearest (row 1, phishing) decides.
  CHECK(model.predict(a).label == Label::phishing);
  CHECK(model.predict(a).phishing_probability == 0.5);
  CHECK_THROWS_AS(KnnModel::fit(train, KnnParams{4}), Error);
  CHECK_THROWS_AS(KnnModel::fit(train, KnnParams{0}), Error);
}

TEST_CASE("SVM separates separable data and reports a consistent probability") {
  LabeledDataset ds;
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    auto v = test::random_values(rng);
    v[11] = i % 2 ? 1 : -1;
    ds.append(v, i % 2 ? Label::legitimate : Label::phishing);
  }
  SvmParams p;
  p.epochs = 30;
  const auto model = SvmModel::fit(ds, p);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += model.predict(ds.row(i)).label == ds.label(i) ? 1 : 0;
  CHECK(correct == ds.size());
  for (int i = 0; i < 1000; ++i) {
    const auto x = test::random_values(rng);
    const auto pred = model.predict(x);
    CHECK((pred.label == Label::phishing) == (pred.phishing_probability >= 0.5));
    CHECK((pred.label == Label::legitimate) == (model.margin(x) > 0));
  }
  const auto& history = model.objective_history();
  REQUIRE(history.size() == 30);
  CHECK(history.back() <= history.front());
  CHECK(history.back() == doctest::Approx(svm_objective(ds, model.weights(), model.bias(), p.lambda)));
}

TEST_CASE("SVM objective matches its definition") {
  const auto ds = test::random_dataset(50, 4);
  std::array<double, kFeatureCount> w{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) w[f] = 0.1 * static_cast<double>(f % 5) - 0.2;
  const double b = 0.3, lambda = 0.01;
  double hinge = 0, norm = 0;
  for (const double x : w) norm += x * x;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double m = b;
    for (std::size_t f = 0; f < kFeatureCount; ++f) m += w[f] * ds.at(i, f);
    hinge += std::max(0.0, 1.0 - to_int(ds.label(i)) * m);
  }
  CHECK(svm_objective(ds, w, b, lambda) == doctest::Approx(lambda / 2 * norm + hinge / ds.size()));
}

TEST_CASE("SVM refuses single-class data") {
  LabeledDataset ds;
  FeatureValues v{};
  ds.append(v, Label::phishing);
  ds.append(v, Label::phishing);
  CHECK_THROWS_AS(SvmModel::fit(ds, SvmParams{}), Error);
}

TEST_CASE("model files round-trip for every algorithm") {
  const auto ds = test::random_dataset(300, 31);
  AlgorithmParams params;
  params.forest.trees = 12;
  params.forest.threads = 1;
  const auto dir = test::temp_dir("model");
  for (const auto algo : {Algorithm::random_forest, Algorithm::knn, Algorithm::svm}) {
    const auto model = train_model(algo, ds, params, 9, ModelMetadata{"random", ds.size(), 1.0, 9});
    const auto path = dir / (std::string(to_string(algo)) + ".model");
    save_model(model, path);
    const auto back = load_model(path);
    CHECK(back == model);
    CHECK(serialize_model(back) == serialize_model(model));
    CHECK(model_id(back) == model_id(model));
    CHECK(model_id(model).rfind(std::string(to_string(algo)) + "-", 0) == 0);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      const auto x = test::random_values(rng);
      const auto a = model.predict(x);
      const auto b = back.predict(x);
      REQUIRE(a.label == b.label);
      REQUIRE(a.phishing_probability == b.phishing_probability);
    }
  }
}

TEST_CASE("damaged model files are rejected with the right error") {
  const auto ds = test::random_dataset(100, 32);
  AlgorithmParams params;
  params.forest.trees = 3;
  const auto bytes = serialize_model(train_model(Algorithm::random_forest, ds, params, 1));
  const auto code_of = [](const std::string& b) {
    try {
      deserialize_model(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::startup;
  };
  CHECK(code_of(bytes.substr(0, bytes.size() / 2)) == ErrorCode::model_corrupt);
  CHECK(code_of(bytes.substr(0, 10)) == ErrorCode::model_corrupt);
  CHECK(code_of("") == ErrorCode::model_corrupt);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x20;
  CHECK(code_of(flipped) == ErrorCode::model_corrupt);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of(magic) == ErrorCode::model_corrupt);
  auto future = bytes;
  future[8] = 2;  // u32 LE version right after the 8-byte magic
  CHECK(code_of(future) == ErrorCode::model_version);
  try {
    deserialize_model(future);
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('1') != std::string::npos);
  }
  CHECK_THROWS_AS(load_model("/nonexistent/dir/x.model"), Error);
}

TEST_CASE("permutation importance is deterministic and zero for constant columns") {
  auto ds = test::random_dataset(400, 41);
  const std::vector<Ternary> zeros(ds.size(), 0);
  ds.set_column(3, zeros);
  AlgorithmParams params;
  params.forest.trees = 10;
  params.forest.threads = 1;
  const auto model = train_model(Algorithm::random_forest, ds, params, 2);
  const auto a = permutation_importance(model, ds, 3, 5);
  const auto b = permutation_importance(model, ds, 3, 5);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    CHECK(a[f].mean == b[f].mean);
    CHECK(a[f].std == b[f].std);
  }
  CHECK(a[3].mean == 0.0);
  CHECK(a[3].std == 0.0);
}

TEST_CASE("feature ranking is stable for equal scores") {
  const std::vector<double> scores{0.1, 0.3, 0.3, 0.0, 0.3};
  CHECK(rank_features(scores) == std::vector<std::size_t>{1, 2, 4, 0, 3});
}

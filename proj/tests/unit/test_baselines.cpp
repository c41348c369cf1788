#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "dcitl/baselines/baselines.hpp"
#include "dcitl/common/rng.hpp"

using namespace dcitl;
using namespace dcitl::baselines;

namespace {

SparseVector dense_to_sparse(const std::vector<double>& v) {
  SparseVector s;
  s.dimension = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      s.indices.push_back(static_cast<std::uint32_t>(i));
      s.values.push_back(v[i]);
    }
  }
  return s;
}

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  double ok = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ok += a[i] == b[i];
  return ok / static_cast<double>(a.size());
}

// Plain recursive CART: every feature, every midpoint, lowest Gini wins with
// ties to the lowest (feature, threshold); splits only on strict improvement.
struct OracleTree {
  struct Node {
    int feature = -1;
    double threshold = 0;
    std::unique_ptr<Node> left, right;
    double p1 = 0;
  };

  static double gini(double n0, double n1) {
    const double n = n0 + n1;
    return n == 0 ? 0 : 1 - (n0 / n) * (n0 / n) - (n1 / n) * (n1 / n);
  }

  static std::unique_ptr<Node> build(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                     const std::vector<std::size_t>& idx, std::size_t depth,
                                     std::size_t max_depth) {
    auto node = std::make_unique<Node>();
    double n0 = 0, n1 = 0;
    for (auto i : idx) (y[i] ? n1 : n0) += 1;
    node->p1 = n1 / (n0 + n1);
    const double parent = gini(n0, n1);
    if (parent == 0 || depth >= max_depth || idx.size() < 2) return node;
    double best = INFINITY;
    int bf = -1;
    double bt = 0;
    for (std::size_t f = 0; f < x[0].size(); ++f) {
      std::vector<double> values;
      for (auto i : idx) values.push_back(x[i][f]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        const double t = 0.5 * (values[k] + values[k + 1]);
        double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
        for (auto i : idx) {
          if (x[i][f] <= t) (y[i] ? l1 : l0) += 1;
          else (y[i] ? r1 : r0) += 1;
        }
        const double imp = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / (n0 + n1);
        if (imp < best) {
          best = imp;
          bf = static_cast<int>(f);
          bt = t;
        }
      }
    }
    if (bf < 0 || !(best < parent - 1e-12)) return node;
    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x[i][static_cast<std::size_t>(bf)] <= bt ? li : ri).push_back(i);
    node->feature = bf;
    node->threshold = bt;
    node->left = build(x, y, li, depth + 1, max_depth);
    node->right = build(x, y, ri, depth + 1, max_depth);
    return node;
  }

  static double predict(const Node& n, const std::vector<double>& x) {
    if (n.feature < 0) return n.p1;
    return x[static_cast<std::size_t>(n.feature)] <= n.threshold ? predict(*n.left, x) : predict(*n.right, x);
  }
};

}  // namespace

TEST_CASE("logistic regression separates a separable 2-D set") {
  Rng rng(1);
  std::vector<SparseVector> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int label = i % 2;
    const double sign = label ? 1.0 : -1.0;
    x.push_back(dense_to_sparse({sign * rng.uniform(0.2, 1.0), rng.uniform(-1.0, 1.0)}));
    y.push_back(label);
  }
  BaselineModel m = train_baseline(BaselineKind::lr, x, y, {}, 0);
  CHECK(accuracy(predict_baseline(m, x).labels, y) == 1.0);
  for (double w : std::get<LogisticModel>(m.params).weights) CHECK(std::isfinite(w));
}

TEST_CASE("zero-weight logistic model predicts 0.5 and class 0") {
  BaselineModel m{BaselineKind::lr, 3, LogisticModel{{0, 0, 0}, 0}};
  const std::vector<SparseVector> x{dense_to_sparse({1, 2, 3})};
  Prediction p = predict_baseline(m, x);
  CHECK(p.probabilities[0][1] == 0.5);
  CHECK(p.labels[0] == 0);
}

TEST_CASE("training rejects single-class data and dimension mismatch") {
  const std::vector<SparseVector> x{dense_to_sparse({1, 0}), dense_to_sparse({0, 1})};
  const std::vector<int> same{1, 1};
  CHECK_THROWS_AS(train_baseline(BaselineKind::lr, x, same, {}, 0), std::invalid_argument);
  CHECK_THROWS_AS(train_baseline(BaselineKind::nb, x, same, {}, 0), std::invalid_argument);
  CHECK_THROWS_AS(train_baseline(BaselineKind::rf, x, same, {}, 0), std::invalid_argument);
  const std::vector<int> y{0, 1};
  BaselineModel m = train_baseline(BaselineKind::nb, x, y, {}, 0);
  const std::vector<SparseVector> wrong{dense_to_sparse({1, 0, 0})};
  CHECK_THROWS_AS(predict_baseline(m, wrong), std::invalid_argument);
}

TEST_CASE("naive Bayes likelihoods and class evidence") {
  // "good" appears only in positive documents.
  const std::vector<SparseVector> x{dense_to_sparse({3, 0, 1}), dense_to_sparse({2, 0, 0}),
                                    dense_to_sparse({0, 2, 1}), dense_to_sparse({0, 1, 0}),
                                    dense_to_sparse({0, 1, 1})};
  const std::vector<int> y{1, 1, 0, 0, 0};
  BaselineModel m = train_baseline(BaselineKind::nb, x, y, {}, 0);
  const auto& nb = std::get<NaiveBayesModel>(m.params);
  CHECK(nb.log_likelihood[1][0] > nb.log_likelihood[0][0]);
  for (int c = 0; c < 2; ++c) {
    double total = 0;
    for (double l : nb.log_likelihood[c]) total += std::exp(l);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Empty document: likelihood terms vanish and the prior (3 neg vs 2 pos) decides.
  SparseVector empty;
  empty.dimension = 3;
  const std::vector<SparseVector> probe{empty};
  CHECK(predict_baseline(m, probe).labels[0] == 0);
}

TEST_CASE("naive Bayes log-space posterior matches a direct-probability oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t vocab = 10;
    std::vector<SparseVector> x;
    std::vector<int> y;
    for (int d = 0; d < 12; ++d) {
      std::vector<double> counts(vocab, 0.0);
      for (int k = 0; k < 4; ++k) counts[rng.below(vocab)] += 1;
      x.push_back(dense_to_sparse(counts));
      y.push_back(d % 2);
    }
    BaselineConfig cfg;
    BaselineModel m = train_baseline(BaselineKind::nb, x, y, cfg, 0);

    // Oracle: probabilities estimated by counting, multiplied directly.
    std::array<std::vector<double>, 2> theta;
    std::array<double, 2> prior{};
    for (int c = 0; c < 2; ++c) {
      std::vector<double> cnt(vocab, cfg.nb.alpha);
      double total = cfg.nb.alpha * vocab;
      double docs = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] != c) continue;
        docs += 1;
        for (std::size_t t = 0; t < vocab; ++t) {
          cnt[t] += x[i].at(static_cast<std::uint32_t>(t));
          total += x[i].at(static_cast<std::uint32_t>(t));
        }
      }
      for (double& v : cnt) v /= total;
      theta[c] = cnt;
      prior[c] = docs / static_cast<double>(x.size());
    }
    std::vector<double> probe(vocab, 0.0);
    for (int k = 0; k < 5; ++k) probe[rng.below(vocab)] += 1;
    std::array<double, 2> joint{};
    for (int c = 0; c < 2; ++c) {
      joint[c] = prior[c];
      for (std::size_t t = 0; t < vocab; ++t) joint[c] *= std::pow(theta[c][t], probe[t]);
    }
    const double posterior1 = joint[1] / (joint[0] + joint[1]);
    const std::vector<SparseVector> px{dense_to_sparse(probe)};
    CHECK(std::abs(predict_baseline(m, px).probabilities[0][1] - posterior1) < 1e-9);
  }
}

TEST_CASE("single depth-1 tree reproduces the best single split") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SparseVector> x;
    std::vector<std::vector<double>> dense;
    std::vector<int> y;
    for (int i = 0; i < 25; ++i) {
      const double v = std::floor(rng.uniform(0, 10));
      dense.push_back({v});
      x.push_back(dense_to_sparse({v}));
      y.push_back(v + rng.uniform(-3, 3) > 5 ? 1 : 0);
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    BaselineConfig cfg;
    cfg.rf.trees = 1;
    cfg.rf.max_depth = 1;
    cfg.rf.bootstrap = false;
    BaselineModel m = train_baseline(BaselineKind::rf, x, y, cfg, 5);

    // Exhaustive enumeration of thresholds on the single feature.
    std::vector<double> values;
    for (const auto& d : dense) values.push_back(d[0]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double best = INFINITY, best_t = 0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = 0.5 * (values[k] + values[k + 1]);
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (dense[i][0] <= t) (y[i] ? l1 : l0) += 1;
        else (y[i] ? r1 : r0) += 1;
      }
      const double imp = (l0 + l1) * OracleTree::gini(l0, l1) + (r0 + r1) * OracleTree::gini(r0, r1);
      if (imp < best) {
        best = imp;
        best_t = t;
      }
    }
    auto majority = [&](bool left_side) {
      double c0 = 0, c1 = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if ((dense[i][0] <= best_t) == left_side) (y[i] ? c1 : c0) += 1;
      }
      return c1 > c0 ? 1 : 0;
    };
    const auto& tree = std::get<ForestModel>(m.params).trees.at(0);
    if (tree.nodes[0].feature < 0) continue;  // no improving split
    CHECK(tree.nodes[0].threshold == best_t);
    for (double v = -0.5; v < 10.5; v += 0.5) {
      const std::vector<SparseVector> probe{dense_to_sparse({v})};
      CHECK(predict_baseline(m, probe).labels[0] == majority(v <= best_t));
    }
  }
}

TEST_CASE("forest without bootstrap and with all features equals the plain tree oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 40, f = 5;
    std::vector<std::vector<double>> dense(n, std::vector<double>(f));
    std::vector<SparseVector> x;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : dense[i]) v = rng.uniform() < 0.4 ? 0.0 : std::round(rng.uniform(0, 4));
      x.push_back(dense_to_sparse(dense[i]));
      y.push_back(dense[i][0] + dense[i][2] > 3 ? 1 : (rng.uniform() < 0.2 ? 1 : 0));
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    BaselineConfig cfg;
    cfg.rf.trees = 1;
    cfg.rf.max_depth = 4;
    cfg.rf.bootstrap = false;
    cfg.rf.max_features = f;
    BaselineModel m = train_baseline(BaselineKind::rf, x, y, cfg, 9);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    auto oracle = OracleTree::build(dense, y, idx, 0, 4);
    for (int probe = 0; probe < 100; ++probe) {
      std::vector<double> q(f);
      for (auto& v : q) v = std::round(rng.uniform(-1, 5) * 2) / 2;
      const std::vector<SparseVector> px{dense_to_sparse(q)};
      CHECK(predict_baseline(m, px).probabilities[0][1] == OracleTree::predict(*oracle, q));
    }
  }
}

TEST_CASE("forest respects tree count and depth and is deterministic") {
  Rng rng(13);
  std::vector<SparseVector> x;
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    std::vector<double> v(30, 0.0);
    for (int k = 0; k < 5; ++k) v[rng.below(30)] = rng.uniform();
    y.push_back(v[0] + v[1] > v[2] ? 1 : 0);
    x.push_back(dense_to_sparse(v));
  }
  BaselineConfig cfg;
  cfg.rf.trees = 7;
  cfg.rf.max_depth = 3;
  BaselineModel a = train_baseline(BaselineKind::rf, x, y, cfg, 21);
  BaselineModel b = train_baseline(BaselineKind::rf, x, y, cfg, 21);
  const auto& forest = std::get<ForestModel>(a.params);
  CHECK(forest.trees.size() == 7);
  for (const auto& t : forest.trees) CHECK(t.depth() <= 3);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_json(baseline_from_json(to_json(a))) == to_json(a));
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dcitl/common/error.hpp"
#include "dcitl/common/rng.hpp"
#include "dcitl/experiments/metrics.hpp"
#include "dcitl/experiments/split.hpp"
#include "dcitl/experiments/synthetic.hpp"

using namespace dcitl;
using namespace dcitl::experiments;

namespace {

text::Corpus labeled_corpus(std::size_t pos, std::size_t neg) {
  std::vector<text::Document> docs;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    docs.push_back({{"t" + std::to_string(i)}, i < pos ? text::kPositive : text::kNegative, "d"});
  }
  return text::Corpus("d", std::move(docs));
}

struct Counts {
  std::size_t pos = 0, neg = 0;
};

Counts count(const text::Corpus& c, const std::vector<std::size_t>& idx) {
  Counts k;
  for (auto i : idx) (*c[i].label == text::kPositive ? k.pos : k.neg) += 1;
  return k;
}

// Independent brute-force scorer: counts every (gold, predicted) pair by
// scanning once per cell.
struct Oracle {
  double acc, prec[2], rec[2], f1[2];
};

Oracle brute_force(const std::vector<int>& pred, const std::vector<int>& gold) {
  double cell[2][2] = {};
  for (int g = 0; g < 2; ++g) {
    for (int p = 0; p < 2; ++p) {
      for (std::size_t i = 0; i < gold.size(); ++i) cell[g][p] += gold[i] == g && pred[i] == p;
    }
  }
  Oracle o{};
  o.acc = (cell[0][0] + cell[1][1]) / static_cast<double>(gold.size());
  for (int c = 0; c < 2; ++c) {
    const double tp = cell[c][c], fp = cell[1 - c][c], fn = cell[c][1 - c];
    o.prec[c] = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    o.rec[c] = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    o.f1[c] = o.prec[c] + o.rec[c] > 0 ? 2 * o.prec[c] * o.rec[c] / (o.prec[c] + o.rec[c]) : 0.0;
  }
  return o;
}

}  // namespace

TEST_CASE("ratio parsing") {
  CHECK(RatioSpec::parse("3:10") == RatioSpec{3, 10});
  CHECK(RatioSpec::parse("10:10").balanced());
  CHECK(RatioSpec{7, 10}.str() == "7:10");
  for (const char* bad : {"", "3", "3:", ":10", "0:10", "3:0", "a:b", "3:10:1", "-1:10"}) {
    CHECK_THROWS_AS(RatioSpec::parse(bad), std::invalid_argument);
  }
  CHECK(standard_ratios().size() == 5);
}

TEST_CASE("imbalanced split arithmetic") {
  const text::Corpus c = labeled_corpus(1000, 1000);
  REQUIRE(c.class_counts()[text::kPositive] == 1000);
  const SplitPlan s310 = make_imbalanced_split(c, {3, 10}, 0.2, 7);
  const Counts tr = count(c, s310.train), te = count(c, s310.test);
  CHECK(tr.pos == 240);
  CHECK(tr.neg == 800);
  CHECK(te.pos == 200);
  CHECK(te.neg == 200);
  const SplitPlan s110 = make_imbalanced_split(c, {1, 10}, 0.2, 7);
  CHECK(count(c, s110.train).pos == 80);
  CHECK(count(c, s110.train).neg == 800);
  const SplitPlan bal = make_imbalanced_split(c, {10, 10}, 0.2, 7);
  CHECK(count(c, bal.train).pos == 800);
  CHECK(count(c, bal.train).neg == 800);
  // Same seed, same test set, regardless of ratio.
  CHECK(bal.test == s310.test);
}

TEST_CASE("split properties over many seeds") {
  const text::Corpus c = labeled_corpus(170, 130);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const RatioSpec& r : standard_ratios()) {
      const SplitPlan a = make_imbalanced_split(c, r, 0.2, seed);
      const SplitPlan b = make_imbalanced_split(c, r, 0.2, seed);
      CHECK(a.train == b.train);
      CHECK(a.test == b.test);
      std::set<std::size_t> test(a.test.begin(), a.test.end());
      for (auto i : a.train) CHECK(!test.contains(i));
      const Counts tr = count(c, a.train), te = count(c, a.test);
      CHECK(te.pos == te.neg);
      CHECK(te.pos == 26);
      CHECK(tr.pos * r.negatives == tr.neg * r.positives);
    }
  }
  CHECK(make_imbalanced_split(c, {3, 10}, 0.2, 1).train != make_imbalanced_split(c, {3, 10}, 0.2, 2).train);
}

TEST_CASE("split rejects impossible ratios with the required counts") {
  const text::Corpus c = labeled_corpus(100, 1000);
  try {
    make_imbalanced_split(c, {10, 10}, 0.2, 0);
    FAIL("expected rejection");
  } catch (const StageError& e) {
    CHECK(e.stage() == "split");
    CHECK(std::string(e.what()).find("needs 980 positive") != std::string::npos);
  }
  // Non-integral products trim the negatives.
  const text::Corpus d = labeled_corpus(500, 503);
  const SplitPlan s = make_imbalanced_split(d, {3, 10}, 0.2, 0);
  CHECK(count(d, s.train).neg == 400);
  CHECK(count(d, s.train).pos == 120);
}

TEST_CASE("evaluate on hand-built confusion matrices") {
  SUBCASE("tp=60 fp=20 fn=40 tn=80") {
    std::vector<int> pred, gold;
    auto add = [&](int g, int p, int n) {
      for (int i = 0; i < n; ++i) {
        gold.push_back(g);
        pred.push_back(p);
      }
    };
    add(1, 1, 60);
    add(0, 1, 20);
    add(1, 0, 40);
    add(0, 0, 80);
    const MetricsReport m = evaluate(pred, gold);
    CHECK(m.per_class[1].precision == doctest::Approx(0.75));
    CHECK(m.per_class[1].accuracy == doctest::Approx(0.6));
    CHECK(m.f1_positive() == doctest::Approx(2 * 0.45 / 1.35));
    CHECK(m.f1_positive() == doctest::Approx(0.6667).epsilon(1e-4));
    CHECK(m.accuracy == doctest::Approx(0.7));
  }
  SUBCASE("single-class collapse on a balanced test set") {
    const std::vector<int> gold{1, 1, 0, 0};
    const std::vector<int> pred(4, text::kPositive);
    const MetricsReport m = evaluate(pred, gold, Context::adapted);
    CHECK(m.accuracy == 0.5);
    CHECK(m.f1_positive() == doctest::Approx(2.0 / 3));
    CHECK(m.f1_negative() == 0.0);
    CHECK(m.per_class[0].precision == 0.0);
  }
  SUBCASE("perfect predictions") {
    const std::vector<int> gold{1, 0, 1, 0, 0};
    const MetricsReport m = evaluate(gold, gold);
    CHECK(m.accuracy == 1.0);
    for (const auto& c : m.per_class) {
      CHECK(c.f1 == 1.0);
      CHECK(c.precision == 1.0);
      CHECK(c.accuracy == 1.0);
    }
  }
  SUBCASE("absent gold class is flagged") {
    const std::vector<int> gold{1, 1, 1};
    const std::vector<int> pred{1, 0, 1};
    const MetricsReport m = evaluate(pred, gold);
    CHECK(m.per_class[0].absent);
    CHECK(m.per_class[0].f1 == 0.0);
    CHECK(!m.per_class[1].absent);
  }
  const std::vector<int> a{0, 1}, b{0}, bad{0, 2};
  CHECK_THROWS_AS(evaluate(a, b), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(bad, a), std::out_of_range);
}

TEST_CASE("evaluate agrees with the brute-force oracle") {
  Rng rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const double bias = rng.uniform();
    std::vector<int> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = rng.uniform() < bias;
      pred[i] = rng.uniform() < 0.5;
    }
    const MetricsReport m = evaluate(pred, gold);
    const Oracle o = brute_force(pred, gold);
    CHECK(std::abs(m.accuracy - o.acc) <= 1e-12);
    double weighted = 0;
    for (int c = 0; c < 2; ++c) {
      CHECK(std::abs(m.per_class[c].precision - o.prec[c]) <= 1e-12);
      CHECK(std::abs(m.per_class[c].accuracy - o.rec[c]) <= 1e-12);
      CHECK(std::abs(m.per_class[c].f1 - o.f1[c]) <= 1e-12);
      CHECK(m.per_class[c].f1 >= 0.0);
      CHECK(m.per_class[c].f1 <= 1.0);
      weighted += m.per_class[c].accuracy * static_cast<double>(m.per_class[c].support);
    }
    CHECK(std::abs(weighted / static_cast<double>(n) - m.accuracy) <= 1e-12);
  }
}

TEST_CASE("metrics json round trip") {
  const std::vector<int> gold{1, 0, 1, 0};
  const std::vector<int> pred{1, 1, 1, 0};
  const MetricsReport m = evaluate(pred, gold, Context::out);
  const nlohmann::json j = m;
  CHECK(j.at("context") == "Out");
  const MetricsReport back = j.get<MetricsReport>();
  CHECK(nlohmann::json(back) == j);
}

TEST_CASE("permutation shift task") {
  ShiftTaskConfig cfg;
  const ShiftTask t = make_permutation_shift_task(cfg, 3);
  CHECK(t.source_x.shape() == std::vector<std::size_t>{1000, 20});
  CHECK(t.target_train_x.dim(0) + t.target_test_x.dim(0) == 1000);
  CHECK(std::count(t.source_y.begin(), t.source_y.end(), 1) == 500);
  CHECK(t.permutation[0] == 8);
  CHECK(t.permutation[8] == 0);
  CHECK(t.permutation[5] == 5);
  // Class-mean gap sits on coordinates 0..7 in the source and moves in the target.
  auto gap = [](const nn::Tensor& x, const std::vector<int>& y, std::size_t j) {
    double s[2] = {}, n[2] = {};
    for (std::size_t i = 0; i < y.size(); ++i) {
      s[y[i]] += x.at(i, j);
      n[y[i]] += 1;
    }
    return s[1] / n[1] - s[0] / n[0];
  };
  CHECK(gap(t.source_x, t.source_y, 0) > 0.9);
  CHECK(std::abs(gap(t.source_x, t.source_y, 10)) < 0.3);
  CHECK(std::abs(gap(t.target_test_x, t.target_test_y, 0)) < 0.3);
  CHECK(gap(t.target_test_x, t.target_test_y, 8) > 0.9);
  const ShiftTask again = make_permutation_shift_task(cfg, 3);
  CHECK(nn::bit_equal(again.source_x, t.source_x));
  cfg.shifted = 13;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("standard normal draws") {
  Rng rng(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("synthetic reviews") {
  SyntheticTextConfig cfg;
  const text::Corpus c = make_synthetic_reviews(cfg, "kitchen_housewares", 1);
  CHECK(c.size() == 400);
  CHECK(c.class_counts()[text::kPositive] == 200);
  for (const auto& d : c.documents()) {
    CHECK(d.tokens.size() == cfg.length);
    for (const auto& tok : d.tokens) CHECK(text::tokenize(tok) == std::vector<std::string>{tok});
  }
  const text::Corpus again = make_synthetic_reviews(cfg, "kitchen_housewares", 1);
  CHECK(again.documents()[5].tokens == c.documents()[5].tokens);
  const text::Corpus other = make_synthetic_reviews(cfg, "books", 1);
  CHECK(other.documents()[5].tokens != c.documents()[5].tokens);
}

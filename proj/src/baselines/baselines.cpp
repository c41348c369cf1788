#include "dcitl/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "dcitl/common/rng.hpp"

namespace dcitl::baselines {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::lr: return "lr";
    case BaselineKind::nb: return "nb";
    case BaselineKind::rf: return "rf";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& s) {
  if (s == "lr") return BaselineKind::lr;
  if (s == "nb") return BaselineKind::nb;
  if (s == "rf") return BaselineKind::rf;
  throw std::invalid_argument("unknown baseline '" + s + "' (expected lr, nb or rf)");
}

void to_json(nlohmann::json& j, const BaselineConfig& c) {
  j = {{"lr", {{"iterations", c.lr.iterations}, {"l2", c.lr.l2}, {"step_scale", c.lr.step_scale}}},
       {"nb", {{"alpha", c.nb.alpha}}},
       {"rf",
        {{"trees", c.rf.trees},
         {"max_depth", c.rf.max_depth},
         {"max_features", c.rf.max_features},
         {"min_samples_split", c.rf.min_samples_split},
         {"bootstrap", c.rf.bootstrap}}}};
}

void from_json(const nlohmann::json& j, BaselineConfig& c) {
  if (j.contains("lr")) {
    const auto& l = j.at("lr");
    c.lr.iterations = l.value("iterations", c.lr.iterations);
    c.lr.l2 = l.value("l2", c.lr.l2);
    c.lr.step_scale = l.value("step_scale", c.lr.step_scale);
  }
  if (j.contains("nb")) c.nb.alpha = j.at("nb").value("alpha", c.nb.alpha);
  if (j.contains("rf")) {
    const auto& r = j.at("rf");
    c.rf.trees = r.value("trees", c.rf.trees);
    c.rf.max_depth = r.value("max_depth", c.rf.max_depth);
    c.rf.max_features = r.value("max_features", c.rf.max_features);
    c.rf.min_samples_split = r.value("min_samples_split", c.rf.min_samples_split);
    c.rf.bootstrap = r.value("bootstrap", c.rf.bootstrap);
  }
  if (c.rf.trees == 0 || c.nb.alpha <= 0.0 || c.lr.step_scale <= 0.0 || c.lr.l2 < 0.0) {
    throw std::invalid_argument("invalid baseline configuration");
  }
}

namespace {

std::size_t check_inputs(std::span<const SparseVector> features, std::span<const int> labels) {
  if (features.empty() || features.size() != labels.size()) {
    throw std::invalid_argument("baseline training needs one label per feature vector");
  }
  const std::size_t dim = features[0].dimension;
  std::array<std::size_t, 2> counts{};
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].dimension != dim) throw std::invalid_argument("feature dimensions differ");
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw std::invalid_argument("baseline training needs at least one example per class");
  }
  return dim;
}

double sparse_dot(const SparseVector& x, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.indices.size(); ++k) s += x.values[k] * w[x.indices[k]];
  return s;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

int argmax2(const std::array<double, 2>& p) { return p[1] > p[0] ? 1 : 0; }

// ---------------------------------------------------------------- LR

LogisticModel train_logistic(std::span<const SparseVector> x, std::span<const int> y,
                             std::size_t dim, const LogisticConfig& cfg) {
  double max_sq = 0.0;
  for (const auto& v : x) max_sq = std::max(max_sq, v.norm() * v.norm());
  // Mean BCE gradient is Lipschitz with constant 0.25 * (max ||x||^2 + 1)
  // (the +1 covers the bias), plus l2.
  const double lipschitz = 0.25 * (max_sq + 1.0) + cfg.l2;
  const double step = cfg.step_scale / lipschitz;
  const double inv_n = 1.0 / static_cast<double>(x.size());

  LogisticModel m{std::vector<double>(dim, 0.0), 0.0};
  std::vector<double> grad(dim);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t d = 0; d < dim; ++d) grad[d] = cfg.l2 * m.weights[d];
    double grad_b = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = (sigmoid(sparse_dot(x[i], m.weights) + m.bias) - y[i]) * inv_n;
      grad_b += r;
      for (std::size_t k = 0; k < x[i].indices.size(); ++k) grad[x[i].indices[k]] += r * x[i].values[k];
    }
    for (std::size_t d = 0; d < dim; ++d) m.weights[d] -= step * grad[d];
    m.bias -= step * grad_b;
  }
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw std::runtime_error("logistic regression diverged");
  }
  return m;
}

// ---------------------------------------------------------------- NB

NaiveBayesModel train_naive_bayes(std::span<const SparseVector> x, std::span<const int> y,
                                  std::size_t dim, const NaiveBayesConfig& cfg) {
  NaiveBayesModel m;
  std::array<std::vector<double>, 2> counts{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::array<double, 2> totals{}, docs{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    docs[c] += 1.0;
    for (std::size_t k = 0; k < x[i].indices.size(); ++k) {
      if (x[i].values[k] < 0.0) throw std::invalid_argument("naive Bayes needs non-negative counts");
      counts[c][x[i].indices[k]] += x[i].values[k];
      totals[c] += x[i].values[k];
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    m.log_prior[c] = std::log(docs[c] / static_cast<double>(x.size()));
    const double denom = std::log(totals[c] + cfg.alpha * static_cast<double>(dim));
    m.log_likelihood[c].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) m.log_likelihood[c][d] = std::log(counts[c][d] + cfg.alpha) - denom;
  }
  return m;
}

// ---------------------------------------------------------------- RF

double gini(double n0, double n1) {
  const double n = n0 + n1;
  if (n == 0.0) return 0.0;
  const double p0 = n0 / n, p1 = n1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const SparseVector> x, std::span<const int> y, std::size_t dim,
              const ForestConfig& cfg, std::uint64_t seed)
      : x_(x), y_(y), dim_(dim), cfg_(cfg), rng_(seed) {
    max_features_ = cfg.max_features ? std::min(cfg.max_features, dim)
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                                    std::sqrt(static_cast<double>(dim))));
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::size_t> samples, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double n0 = 0, n1 = 0;
    for (std::size_t s : samples) (y_[s] == 0 ? n0 : n1) += 1.0;
    const double n = n0 + n1;
    tree_.nodes[id].distribution = {n0 / n, n1 / n};
    const double parent = gini(n0, n1);
    if (parent == 0.0 || depth >= cfg_.max_depth || samples.size() < cfg_.min_samples_split) {
      return id;
    }
    const SplitChoice best = find_split(samples, n0, n1);
    if (best.feature < 0 || !(best.impurity < parent - 1e-12)) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t s : samples) {
      (x_[s].at(static_cast<std::uint32_t>(best.feature)) <= best.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const std::uint32_t l = grow(std::move(left), depth + 1);
    const std::uint32_t r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  // Draws features in random order (lazy Fisher-Yates), skipping ones that
  // are constant in the node, until max_features informative features have
  // been drawn. The chosen set is then evaluated in ascending index order so
  // ties resolve to the lowest feature and threshold.
  std::vector<std::uint32_t> candidate_features(const std::vector<std::size_t>& samples) {
    std::unordered_set<std::uint32_t> present;
    for (std::size_t s : samples) present.insert(x_[s].indices.begin(), x_[s].indices.end());
    std::vector<std::uint32_t> chosen;
    if (max_features_ >= dim_) {
      chosen.assign(present.begin(), present.end());
    } else {
      std::unordered_map<std::size_t, std::size_t> swaps;
      auto slot = [&](std::size_t i) {
        const auto it = swaps.find(i);
        return it == swaps.end() ? i : it->second;
      };
      for (std::size_t i = 0; i < dim_ && chosen.size() < max_features_; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_.below(dim_ - i));
        const std::size_t pick = slot(j);
        swaps[j] = slot(i);
        if (present.contains(static_cast<std::uint32_t>(pick))) chosen.push_back(static_cast<std::uint32_t>(pick));
      }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  SplitChoice find_split(const std::vector<std::size_t>& samples, double n0, double n1) {
    SplitChoice best;
    best.impurity = INFINITY;
    const double n = n0 + n1;
    std::vector<std::pair<double, int>> column(samples.size());
    for (std::uint32_t f : candidate_features(samples)) {
      for (std::size_t i = 0; i < samples.size(); ++i) {
        column[i] = {x_[samples[i]].at(f), y_[samples[i]]};
      }
      std::sort(column.begin(), column.end());
      double l0 = 0, l1 = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second == 0 ? l0 : l1) += 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const double nl = l0 + l1, nr = n - nl;
        const double impurity = (nl * gini(l0, l1) + nr * gini(n0 - l0, n1 - l1)) / n;
        if (impurity < best.impurity) {
          best = {static_cast<int>(f), 0.5 * (column[i].first + column[i + 1].first), impurity};
        }
      }
    }
    return best;
  }

  std::span<const SparseVector> x_;
  std::span<const int> y_;
  std::size_t dim_;
  ForestConfig cfg_;
  Rng rng_;
  std::size_t max_features_;
  DecisionTree tree_;
};

ForestModel train_forest(std::span<const SparseVector> x, std::span<const int> y, std::size_t dim,
                         const ForestConfig& cfg, std::uint64_t seed) {
  ForestModel m;
  m.trees.reserve(cfg.trees);
  for (std::size_t t = 0; t < cfg.trees; ++t) {
    const std::uint64_t tree_seed = mix_seed(seed, t);
    Rng rng(tree_seed);
    std::vector<std::size_t> samples(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      samples[i] = cfg.bootstrap ? static_cast<std::size_t>(rng.below(x.size())) : i;
    }
    TreeBuilder builder(x, y, dim, cfg, rng.next());
    m.trees.push_back(builder.build(std::move(samples)));
  }
  return m;
}

}  // namespace

std::array<double, 2> DecisionTree::predict(const SparseVector& x) const {
  std::uint32_t node = 0;
  while (nodes[node].feature >= 0) {
    const TreeNode& n = nodes[node];
    node = x.at(static_cast<std::uint32_t>(n.feature)) <= n.threshold ? n.left : n.right;
  }
  return nodes[node].distribution;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes[i].feature >= 0) d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
  }
  return deepest;
}

BaselineModel train_baseline(BaselineKind kind, std::span<const SparseVector> features,
                             std::span<const int> labels, const BaselineConfig& config,
                             std::uint64_t seed) {
  const std::size_t dim = check_inputs(features, labels);
  BaselineModel model{kind, dim, LogisticModel{}};
  switch (kind) {
    case BaselineKind::lr: model.params = train_logistic(features, labels, dim, config.lr); break;
    case BaselineKind::nb: model.params = train_naive_bayes(features, labels, dim, config.nb); break;
    case BaselineKind::rf: model.params = train_forest(features, labels, dim, config.rf, seed); break;
  }
  return model;
}

Prediction predict_baseline(const BaselineModel& model, std::span<const SparseVector> features) {
  Prediction out;
  out.labels.reserve(features.size());
  out.probabilities.reserve(features.size());
  for (const SparseVector& x : features) {
    if (x.dimension != model.dimension) {
      throw std::invalid_argument("feature dimension " + std::to_string(x.dimension) +
                                  " does not match model dimension " + std::to_string(model.dimension));
    }
    std::array<double, 2> p{};
    if (const auto* lr = std::get_if<LogisticModel>(&model.params)) {
      const double p1 = sigmoid(sparse_dot(x, lr->weights) + lr->bias);
      p = {1.0 - p1, p1};
    } else if (const auto* nb = std::get_if<NaiveBayesModel>(&model.params)) {
      std::array<double, 2> score = nb->log_prior;
      for (std::size_t c = 0; c < 2; ++c) score[c] += sparse_dot(x, nb->log_likelihood[c]);
      const double top = std::max(score[0], score[1]);
      const double z = std::exp(score[0] - top) + std::exp(score[1] - top);
      p = {std::exp(score[0] - top) / z, std::exp(score[1] - top) / z};
      out.labels.push_back(score[1] > score[0] ? 1 : 0);
      out.probabilities.push_back(p);
      continue;
    } else {
      const auto& forest = std::get<ForestModel>(model.params);
      for (const DecisionTree& t : forest.trees) {
        const auto d = t.predict(x);
        p[0] += d[0];
        p[1] += d[1];
      }
      p[0] /= static_cast<double>(forest.trees.size());
      p[1] /= static_cast<double>(forest.trees.size());
    }
    out.labels.push_back(argmax2(p));
    out.probabilities.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const BaselineModel& model) {
  nlohmann::json j = {{"kind", to_string(model.kind)}, {"dimension", model.dimension}};
  if (const auto* lr = std::get_if<LogisticModel>(&model.params)) {
    j["weights"] = lr->weights;
    j["bias"] = lr->bias;
  } else if (const auto* nb = std::get_if<NaiveBayesModel>(&model.params)) {
    j["log_prior"] = nb->log_prior;
    j["log_likelihood"] = nb->log_likelihood;
  } else {
    nlohmann::json trees = nlohmann::json::array();
    for (const DecisionTree& t : std::get<ForestModel>(model.params).trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const TreeNode& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.distribution[0], n.distribution[1]});
      }
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  }
  return j;
}

BaselineModel baseline_from_json(const nlohmann::json& j) {
  BaselineModel m;
  m.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
  m.dimension = j.at("dimension").get<std::size_t>();
  switch (m.kind) {
    case BaselineKind::lr:
      m.params = LogisticModel{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
      break;
    case BaselineKind::nb: {
      NaiveBayesModel nb;
      nb.log_prior = j.at("log_prior").get<std::array<double, 2>>();
      nb.log_likelihood = j.at("log_likelihood").get<std::array<std::vector<double>, 2>>();
      m.params = std::move(nb);
      break;
    }
    case BaselineKind::rf: {
      ForestModel f;
      for (const auto& nodes : j.at("trees")) {
        DecisionTree t;
        for (const auto& n : nodes) {
          TreeNode node;
          node.feature = n.at(0).get<int>();
          node.threshold = n.at(1).get<double>();
          node.left = n.at(2).get<std::uint32_t>();
          node.right = n.at(3).get<std::uint32_t>();
          node.distribution = {n.at(4).get<double>(), n.at(5).get<double>()};
          t.nodes.push_back(node);
        }
        f.trees.push_back(std::move(t));
      }
      m.params = std::move(f);
      break;
    }
  }
  return m;
}

}  // namespace dcitl::baselines

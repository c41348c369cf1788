#include "dcitl/experiments/synthetic.hpp"

#include <numeric>
#include <stdexcept>

#include "dcitl/common/rng.hpp"
#include "dcitl/text/corpus.hpp"

namespace dcitl::experiments {

void ShiftTaskConfig::validate() const {
  if (source_samples < 2 || target_samples < 4) throw std::invalid_argument("shift task needs more samples");
  if (informative == 0 || informative > dim) throw std::invalid_argument("informative must lie in [1, dim]");
  if (shifted > informative || shifted > dim - informative) {
    throw std::invalid_argument("shifted coordinates must fit in both the informative and noise blocks");
  }
  if (!(separation > 0.0)) throw std::invalid_argument("separation must be positive");
}

void to_json(nlohmann::json& j, const ShiftTaskConfig& c) {
  j = {{"source_samples", c.source_samples}, {"target_samples", c.target_samples}, {"dim", c.dim},
       {"informative", c.informative},       {"shifted", c.shifted},               {"separation", c.separation}};
}

void from_json(const nlohmann::json& j, ShiftTaskConfig& c) {
  c.source_samples = j.value("source_samples", c.source_samples);
  c.target_samples = j.value("target_samples", c.target_samples);
  c.dim = j.value("dim", c.dim);
  c.informative = j.value("informative", c.informative);
  c.shifted = j.value("shifted", c.shifted);
  c.separation = j.value("separation", c.separation);
  c.validate();
}

namespace {

void draw(Rng& rng, const ShiftTaskConfig& cfg, const std::vector<std::size_t>& perm, nn::Tensor& x,
          std::vector<int>& y) {
  const std::size_t n = x.dim(0);
  std::vector<double> clean(cfg.dim);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? text::kPositive : text::kNegative;
    const double mean = y[i] == text::kPositive ? cfg.separation : -cfg.separation;
    for (std::size_t j = 0; j < cfg.dim; ++j) clean[j] = rng.normal() + (j < cfg.informative ? mean : 0.0);
    auto row = x.row(i);
    for (std::size_t j = 0; j < cfg.dim; ++j) row[j] = clean[perm[j]];
  }
  // Interleaved labels would make index order informative; shuffle rows.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  nn::Tensor shuffled(x.shape());
  std::vector<int> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = x.row(order[i]);
    std::copy(src.begin(), src.end(), shuffled.row(i).begin());
    ys[i] = y[order[i]];
  }
  x = std::move(shuffled);
  y = std::move(ys);
}

}  // namespace

ShiftTask make_permutation_shift_task(const ShiftTaskConfig& config, std::uint64_t seed) {
  config.validate();
  ShiftTask task;
  std::vector<std::size_t> identity(config.dim);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  task.permutation = identity;
  for (std::size_t s = 0; s < config.shifted; ++s) {
    std::swap(task.permutation[s], task.permutation[config.informative + s]);
  }
  Rng rng(mix_seed(seed, "shift-task"));
  task.source_x = nn::Tensor({config.source_samples, config.dim});
  draw(rng, config, identity, task.source_x, task.source_y);
  const std::size_t n_adapt = config.target_samples / 2;
  std::vector<int> unused;
  task.target_train_x = nn::Tensor({n_adapt, config.dim});
  draw(rng, config, task.permutation, task.target_train_x, unused);
  task.target_test_x = nn::Tensor({config.target_samples - n_adapt, config.dim});
  draw(rng, config, task.permutation, task.target_test_x, task.target_test_y);
  return task;
}

void SyntheticTextConfig::validate() const {
  if (positives + negatives == 0 || length == 0) throw std::invalid_argument("synthetic corpus would be empty");
  if (sentiment_words == 0 || filler_words == 0) throw std::invalid_argument("synthetic vocabulary is empty");
  if (shared_rate < 0 || domain_rate < 0 || confusion_rate < 0 || shared_rate + domain_rate + confusion_rate > 1) {
    throw std::invalid_argument("synthetic token rates must be non-negative and sum to at most 1");
  }
}

void to_json(nlohmann::json& j, const SyntheticTextConfig& c) {
  j = {{"positives", c.positives},         {"negatives", c.negatives},
       {"length", c.length},               {"sentiment_words", c.sentiment_words},
       {"filler_words", c.filler_words},   {"shared_rate", c.shared_rate},
       {"domain_rate", c.domain_rate},     {"confusion_rate", c.confusion_rate}};
}

void from_json(const nlohmann::json& j, SyntheticTextConfig& c) {
  c.positives = j.value("positives", c.positives);
  c.negatives = j.value("negatives", c.negatives);
  c.length = j.value("length", c.length);
  c.sentiment_words = j.value("sentiment_words", c.sentiment_words);
  c.filler_words = j.value("filler_words", c.filler_words);
  c.shared_rate = j.value("shared_rate", c.shared_rate);
  c.domain_rate = j.value("domain_rate", c.domain_rate);
  c.confusion_rate = j.value("confusion_rate", c.confusion_rate);
  c.validate();
}

text::Corpus make_synthetic_reviews(const SyntheticTextConfig& config, const std::string& domain,
                                    std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(mix_seed(seed, "synthetic-reviews"), fnv1a(domain)));
  // Tokens must survive a tsv round trip through tokenize().
  std::string prefix;
  for (const std::string& part : text::tokenize(domain)) prefix += part;
  auto sentiment = [&](const std::string& prefix, int label) {
    return prefix + (label == text::kPositive ? "pos" : "neg") + std::to_string(rng.below(config.sentiment_words));
  };
  std::vector<text::Document> docs;
  const std::size_t n = config.positives + config.negatives;
  for (std::size_t i = 0; i < n; ++i) {
    text::Document d;
    d.label = i < config.positives ? text::kPositive : text::kNegative;
    d.domain = domain;
    for (std::size_t t = 0; t < config.length; ++t) {
      const double u = rng.uniform();
      if (u < config.shared_rate) {
        d.tokens.push_back(sentiment("shared", *d.label));
      } else if (u < config.shared_rate + config.domain_rate) {
        d.tokens.push_back(sentiment(prefix, *d.label));
      } else if (u < config.shared_rate + config.domain_rate + config.confusion_rate) {
        d.tokens.push_back(sentiment("shared", 1 - *d.label));
      } else {
        d.tokens.push_back("w" + std::to_string(rng.below(config.filler_words)));
      }
    }
    docs.push_back(std::move(d));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<text::Document> shuffled;
  shuffled.reserve(n);
  for (auto i : order) shuffled.push_back(std::move(docs[i]));
  return text::Corpus(domain, std::move(shuffled));
}

}  // namespace dcitl::experiments

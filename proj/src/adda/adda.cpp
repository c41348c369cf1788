#include "dcitl/adda/adda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dcitl/common/error.hpp"
#include "dcitl/common/rng.hpp"
#include "dcitl/text/corpus.hpp"

namespace dcitl::adda {

namespace {

constexpr std::size_t kSourceColumn = 0;

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

// d(-log p)/dz and d(-log(1-p))/dz for p = softmax(z)[source], two columns.
// Zero when the clamp is active.
void add_domain_gradient(std::span<double> g, double p, bool toward_source, double weight) {
  if (p <= kProbabilityClamp || p >= 1.0 - kProbabilityClamp) return;
  // dp/dz_source = p(1-p), dp/dz_other = -p(1-p)
  const double d_source = toward_source ? -(1.0 - p) : p;
  g[kSourceColumn] += weight * d_source;
  g[1 - kSourceColumn] -= weight * d_source;
}

void check_logits(const nn::Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) != 2) {
    throw ShapeError("domain logits must be [n, 2], got " + logits.shape_string());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Endless stream of indices in reshuffled passes over [0, n).
class IndexStream {
 public:
  IndexStream(std::size_t n, Rng& rng) : order_(n), rng_(rng) { reshuffle(); }

  std::vector<std::size_t> take(std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k);
    while (out.size() < k) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(order_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  for (int y : labels) {
    if (y == text::kPositive) ++pos;
    else if (y == text::kNegative) ++neg;
    else throw std::invalid_argument("label " + std::to_string(y) + " is neither positive nor negative");
  }
  return {pos, neg};
}

nn::Tensor pick_rows(const nn::Tensor& m, std::span<const std::size_t> idx) {
  nn::Tensor out({idx.size(), m.dim(1)});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto row = m.row(idx[i]);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> pick(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

}  // namespace

std::vector<double> source_probability(const nn::Tensor& logits) {
  check_logits(logits);
  const nn::Tensor p = nn::softmax(logits);
  std::vector<double> out(p.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = p.at(r, kSourceColumn);
  return out;
}

nn::LossResult discriminator_logit_loss(const nn::Tensor& logits, std::size_t n_source,
                                        std::span<const double> source_weights) {
  check_logits(logits);
  const std::size_t n = logits.dim(0);
  if (n_source == 0 || n_source >= n) {
    throw std::invalid_argument("discriminator loss needs non-empty source and target batches");
  }
  if (!source_weights.empty() && source_weights.size() != n_source) {
    throw std::invalid_argument("discriminator loss: one weight per source row required");
  }
  const std::vector<double> p = source_probability(logits);
  nn::LossResult out{0.0, nn::Tensor(logits.shape())};
  const double inv_s = 1.0 / static_cast<double>(n_source);
  const double inv_t = 1.0 / static_cast<double>(n - n_source);
  for (std::size_t r = 0; r < n; ++r) {
    if (std::isnan(p[r])) throw std::domain_error("discriminator produced NaN probabilities");
    const bool source = r < n_source;
    const double w = source ? (source_weights.empty() ? inv_s : source_weights[r]) : inv_t;
    const double q = clamp_probability(p[r]);
    out.loss -= w * std::log(source ? q : 1.0 - q);
    add_domain_gradient(out.gradient.row(r), p[r], source, w);
  }
  return out;
}

nn::LossResult mapping_logit_loss(const nn::Tensor& logits) {
  check_logits(logits);
  const std::vector<double> p = source_probability(logits);
  nn::LossResult out{0.0, nn::Tensor(logits.shape())};
  const double w = 1.0 / static_cast<double>(p.size());
  for (std::size_t r = 0; r < p.size(); ++r) {
    if (std::isnan(p[r])) throw std::domain_error("discriminator produced NaN probabilities");
    out.loss -= w * std::log(clamp_probability(p[r]));
    add_domain_gradient(out.gradient.row(r), p[r], true, w);
  }
  return out;
}

double discriminator_loss(nn::LayerStack& discriminator, const nn::Tensor& source_features,
                          const nn::Tensor& target_features, std::span<const double> source_weights) {
  const nn::Tensor logits = discriminator.forward(nn::concat_rows(source_features, target_features), true);
  nn::LossResult l = discriminator_logit_loss(logits, source_features.dim(0), source_weights);
  discriminator.backward(l.gradient);
  return l.loss;
}

nn::LossResult mapping_loss(nn::LayerStack& discriminator, const nn::Tensor& target_features) {
  const nn::Tensor logits = discriminator.forward(target_features, true);
  nn::LossResult l = mapping_logit_loss(logits);
  nn::Tensor grad_features = discriminator.backward(l.gradient);
  discriminator.zero_grad();
  return {l.loss, std::move(grad_features)};
}

void AdaptationConfig::validate() const {
  if (pretrain_epochs < 1) throw std::invalid_argument("pretrain_epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (log_every < 1) throw std::invalid_argument("log_every must be at least 1");
  pretrain_optimizer.validate();
  discriminator_optimizer.validate();
  target_optimizer.validate();
  weighting.validate();
}

void to_json(nlohmann::json& j, const AdaptationConfig& c) {
  j = {{"pretrain_epochs", c.pretrain_epochs},
       {"adapt_epochs", c.adapt_epochs},
       {"batch_size", c.batch_size},
       {"pretrain_optimizer", c.pretrain_optimizer},
       {"discriminator_optimizer", c.discriminator_optimizer},
       {"target_optimizer", c.target_optimizer},
       {"weighting", c.weighting},
       {"seed", c.seed},
       {"log_every", c.log_every},
       {"trace_weights", c.trace_weights}};
}

void from_json(const nlohmann::json& j, AdaptationConfig& c) {
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.adapt_epochs = j.value("adapt_epochs", c.adapt_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("pretrain_optimizer")) j.at("pretrain_optimizer").get_to(c.pretrain_optimizer);
  if (j.contains("discriminator_optimizer")) j.at("discriminator_optimizer").get_to(c.discriminator_optimizer);
  if (j.contains("target_optimizer")) j.at("target_optimizer").get_to(c.target_optimizer);
  if (j.contains("weighting")) j.at("weighting").get_to(c.weighting);
  c.seed = j.value("seed", c.seed);
  c.log_every = j.value("log_every", c.log_every);
  c.trace_weights = j.value("trace_weights", c.trace_weights);
  c.validate();
}

PretrainResult pretrain_source(nn::LayerStack extractor, nn::LayerStack head, const FeatureSource& source,
                               std::span<const int> labels, const AdaptationConfig& config) {
  config.validate();
  if (source.size() == 0 || labels.size() != source.size()) {
    throw StageError("pretrain", "source corpus is empty or labels do not match inputs");
  }
  const auto [n_pos, n_neg] = class_counts(labels);
  const bool class_ratio = config.weighting.mode == dba::WeightingMode::class_ratio;

  Rng rng(mix_seed(config.seed, "pretrain"));
  nn::Optimizer opt(config.pretrain_optimizer);
  std::vector<std::size_t> order(source.size());
  PretrainResult result;
  for (std::size_t epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0, batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - begin);
      const std::span<const std::size_t> idx(order.data() + begin, count);
      const std::vector<int> y = pick(labels, idx);
      const std::vector<double> w =
          class_ratio ? dba::class_ratio_weights(y, n_pos, n_neg) : dba::uniform_weights(count);
      extractor.zero_grad();
      head.zero_grad();
      const nn::Tensor logits = head.forward(extractor.forward(source.gather(idx), true), true);
      const nn::LossResult l = nn::weighted_cross_entropy_loss(logits, y, w);
      if (!std::isfinite(l.loss)) {
        throw StageError("pretrain", "loss diverged (" + fmt(l.loss) + ") at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batches));
      }
      const std::vector<int> pred = nn::argmax_rows(logits);
      for (std::size_t i = 0; i < count; ++i) correct += pred[i] == y[i];
      extractor.backward(head.backward(l.gradient));
      nn::ParameterSet params = extractor.parameters();
      params.append(head.parameters());
      try {
        opt.step(params);
      } catch (const std::domain_error& e) {
        throw StageError("pretrain", std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
      loss_sum += l.loss;
      ++batches;
    }
    result.curve.push_back({epoch, loss_sum / static_cast<double>(batches),
                            static_cast<double>(correct) / static_cast<double>(order.size())});
  }
  const std::vector<int> pred = predict_target(extractor, head, source);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  result.extractor = std::move(extractor);
  result.head = std::move(head);
  return result;
}

AdaptResult adversarial_adapt(const nn::LayerStack& source_extractor, nn::LayerStack target_extractor,
                              nn::LayerStack discriminator, const FeatureSource& source,
                              std::span<const int> source_labels, const FeatureSource& target,
                              const AdaptationConfig& config, const Probe& probe) {
  config.validate();
  if (source.size() == 0 || target.size() == 0) throw StageError("adapt", "empty source or target corpus");
  const dba::WeightingConfig& wcfg = config.weighting;
  std::size_t n_pos = 0, n_neg = 0;
  if (wcfg.mode == dba::WeightingMode::class_ratio) {
    if (source_labels.size() != source.size()) {
      throw StageError("adapt", "class_ratio weighting needs one label per source sample");
    }
    std::tie(n_pos, n_neg) = class_counts(source_labels);
  }

  Rng rng(mix_seed(config.seed, "adapt"));
  IndexStream source_stream(source.size(), rng);
  nn::Optimizer opt_d(config.discriminator_optimizer);
  nn::Optimizer opt_t(config.target_optimizer);
  const std::size_t k = std::min(config.batch_size, target.size());
  const std::size_t batches = target.size() / k;
  std::vector<std::size_t> target_order(target.size());

  // M_s is frozen, so its features are computed once; rows are computed
  // independently, so these equal per-batch inference bit for bit.
  const nn::LayerStack* frozen[] = {&source_extractor};
  const nn::Tensor source_features = infer_all(frozen, source);

  AdaptResult result;
  std::size_t global_batch = 0;
  for (std::size_t epoch = 1; epoch <= config.adapt_epochs; ++epoch) {
    std::iota(target_order.begin(), target_order.end(), std::size_t{0});
    rng.shuffle(target_order);
    double d_sum = 0.0, m_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b, ++global_batch) {
      const std::span<const std::size_t> t_idx(target_order.data() + b * k, k);
      const std::vector<std::size_t> s_idx = source_stream.take(k);
      const std::string where = " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b);
      try {
        const nn::Tensor fs = pick_rows(source_features, s_idx);
        const nn::Tensor xt = target.gather(t_idx);
        // One cached pass serves both the D step and every per-instance
        // backward below (M_t does not change in between).
        target_extractor.zero_grad();
        const nn::Tensor ft = target_extractor.forward(xt, true);

        // Discriminator step.
        std::vector<double> s_weights;
        if (wcfg.mode == dba::WeightingMode::class_ratio) {
          s_weights = dba::class_ratio_weights(pick(source_labels, s_idx), n_pos, n_neg);
        }
        discriminator.zero_grad();
        const double d_loss = discriminator_loss(discriminator, fs, ft, s_weights);
        if (!std::isfinite(d_loss)) throw std::domain_error("discriminator loss is " + fmt(d_loss));
        opt_d.step(discriminator.parameters());

        // Target-extractor step assembled from per-instance gradients: the
        // upstream gradient is zero outside row i, and zero rows contribute
        // nothing to parameter gradients.
        std::vector<nn::GradientSet> grads;
        grads.reserve(k);
        double m_loss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          target_extractor.zero_grad();
          const nn::LossResult ml = mapping_loss(discriminator, ft.slice_rows(i, 1));
          nn::Tensor upstream(ft.shape());
          std::copy(ml.gradient.data().begin(), ml.gradient.data().end(), upstream.row(i).begin());
          target_extractor.backward(upstream);
          grads.push_back(target_extractor.parameters().gradients());
          m_loss += ml.loss / static_cast<double>(k);
        }
        if (!std::isfinite(m_loss)) throw std::domain_error("mapping loss is " + fmt(m_loss));
        dba::InstanceWeights w;
        if (wcfg.mode == dba::WeightingMode::distance) {
          w = dba::instance_weights(ft, fs, wcfg);
        } else {
          w.weights = dba::uniform_weights(k);
        }
        if (config.trace_weights) result.weight_trace.record(global_batch, w);
        opt_t.weighted_step(target_extractor.parameters(), grads, w.weights);
        d_sum += d_loss;
        m_sum += m_loss;
      } catch (const std::domain_error& e) {
        throw StageError("adapt", e.what() + where);
      }
    }
    AdaptEpoch row{epoch, d_sum / static_cast<double>(batches), m_sum / static_cast<double>(batches), {}};
    if (probe.head && probe.inputs && (epoch % config.log_every == 0 || epoch == config.adapt_epochs)) {
      const std::vector<int> pred = predict_target(target_extractor, *probe.head, *probe.inputs);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == probe.labels[i];
      row.probe_accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
    }
    result.curve.push_back(row);
  }
  target_extractor.zero_grad();
  discriminator.zero_grad();
  result.target_extractor = std::move(target_extractor);
  result.discriminator = std::move(discriminator);
  return result;
}

AdaptResult adapt_with_dba(const nn::LayerStack& source_extractor, nn::LayerStack target_extractor,
                           nn::LayerStack discriminator, const FeatureSource& source,
                           std::span<const int> source_labels, const FeatureSource& target,
                           AdaptationConfig config, const dba::WeightingConfig& weighting,
                           const Probe& probe) {
  config.weighting = weighting;
  return adversarial_adapt(source_extractor, std::move(target_extractor), std::move(discriminator), source,
                           source_labels, target, config, probe);
}

std::vector<int> predict_target(const nn::LayerStack& extractor, const nn::LayerStack& head,
                                const FeatureSource& inputs) {
  const nn::LayerStack* stacks[] = {&extractor, &head};
  return nn::argmax_rows(infer_all(stacks, inputs));
}

void write_pretrain_curve_csv(const std::filesystem::path& path, std::span<const PretrainEpoch> curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss,accuracy\n";
  for (const auto& e : curve) out << e.epoch << ',' << fmt(e.loss) << ',' << fmt(e.accuracy) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_adapt_curve_csv(const std::filesystem::path& path, std::span<const AdaptEpoch> curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,d_loss,m_loss,probe_accuracy\n";
  for (const auto& e : curve) {
    out << e.epoch << ',' << fmt(e.d_loss) << ',' << fmt(e.m_loss) << ','
        << (e.probe_accuracy ? fmt(*e.probe_accuracy) : "") << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dcitl::adda

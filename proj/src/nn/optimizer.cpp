#include "dcitl/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "dcitl/common/error.hpp"

namespace dcitl::nn {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd or adam)");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = {{"kind", to_string(c.kind)},   {"learning_rate", c.learning_rate},
       {"beta1", c.beta1},            {"beta2", c.beta2},
       {"epsilon", c.epsilon},        {"batch_size", c.batch_size}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
  if (j.contains("kind")) c.kind = optimizer_kind_from_string(j.at("kind").get<std::string>());
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.validate();
}

namespace {

void require_finite(const ParameterSet& params, const GradientSet& grads) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].shape() != params[p].value.shape()) {
      throw ShapeError("gradient shape mismatch for parameter '" + params[p].name + "'");
    }
    if (!grads[p].all_finite()) {
      throw std::domain_error("non-finite gradient in parameter '" + params[p].name + "'");
    }
  }
}

}  // namespace

void sgd_step(const ParameterSet& params, const OptimizerConfig& config) {
  config.validate();
  for (const Parameter* p : params) {
    if (!p->grad.all_finite()) {
      throw std::domain_error("non-finite gradient in parameter '" + p->name + "'");
    }
  }
  for (Parameter* p : params) {
    auto v = p->value.data();
    const auto g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= config.learning_rate * g[i];
  }
  params.zero_grad();
}

GradientSet combine_gradients(std::span<const GradientSet> per_instance,
                              std::span<const double> weights) {
  if (per_instance.empty() || per_instance.size() != weights.size()) {
    throw std::invalid_argument("weighted step needs one weight per instance gradient (got " +
                                std::to_string(weights.size()) + " weights for " +
                                std::to_string(per_instance.size()) + " gradients)");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("instance weights must be finite and non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("instance weights must sum to 1 (got " + std::to_string(total) + ")");
  }
  GradientSet combined;
  combined.reserve(per_instance[0].size());
  for (const Tensor& g : per_instance[0]) combined.emplace_back(g.shape());
  for (std::size_t i = 0; i < per_instance.size(); ++i) {
    if (per_instance[i].size() != combined.size()) {
      throw std::invalid_argument("per-instance gradient sets differ in length");
    }
    for (std::size_t p = 0; p < combined.size(); ++p) {
      auto acc = combined[p].data();
      const auto g = per_instance[i][p].data();
      if (g.size() != acc.size()) throw ShapeError("per-instance gradient shape mismatch");
      for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += weights[i] * g[e];
    }
  }
  return combined;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(const ParameterSet& params) {
  apply(params, params.gradients());
  params.zero_grad();
}

void Optimizer::weighted_step(const ParameterSet& params, std::span<const GradientSet> per_instance,
                              std::span<const double> weights) {
  GradientSet combined = combine_gradients(per_instance, weights);
  if (combined.size() != params.size()) {
    throw std::invalid_argument("gradient set does not match parameter count");
  }
  apply(params, combined);
  params.zero_grad();
}

void Optimizer::apply(const ParameterSet& params, const GradientSet& grads) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("gradient set does not match parameter count");
  }
  require_finite(params, grads);
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto v = params[p].value.data();
      const auto g = grads[p].data();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
    ++steps_;
    return;
  }
  if (first_moment_.empty()) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      first_moment_.emplace_back(params[p].value.size(), 0.0);
      second_moment_.emplace_back(params[p].value.size(), 0.0);
    }
  } else if (first_moment_.size() != params.size()) {
    throw std::invalid_argument("optimizer reused with a different parameter set");
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto v = params[p].value.data();
    const auto g = grads[p].data();
    auto& m = first_moment_[p];
    auto& s = second_moment_[p];
    if (m.size() != v.size()) throw std::invalid_argument("optimizer parameter size changed");
    for (std::size_t i = 0; i < v.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
      v[i] -= lr * (m[i] / c1) / (std::sqrt(s[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace dcitl::nn

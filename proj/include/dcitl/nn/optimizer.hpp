#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/nn/layers.hpp"

namespace dcitl::nn {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 10;

  // Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

// Plain SGD on the accumulated gradients: value -= lr * grad, then zero the
// gradients. A non-finite gradient throws and leaves every value untouched.
void sgd_step(const ParameterSet& params, const OptimizerConfig& config);

// Stateful optimizer (Adam keeps first/second moments per parameter).
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // Applies the accumulated gradients and zeroes them.
  void step(const ParameterSet& params);

  // Applies sum_i w_i * g_i where g_i are per-instance gradients. Weights
  // must be non-negative and sum to one within 1e-9.
  void weighted_step(const ParameterSet& params, std::span<const GradientSet> per_instance,
                     std::span<const double> weights);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::size_t step_count() const noexcept { return steps_; }

 private:
  void apply(const ParameterSet& params, const GradientSet& grads);

  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

// sum_i w_i * g_i, validated as in Optimizer::weighted_step.
GradientSet combine_gradients(std::span<const GradientSet> per_instance,
                              std::span<const double> weights);

}  // namespace dcitl::nn

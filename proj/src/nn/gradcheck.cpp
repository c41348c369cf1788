#include "dcitl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcitl::nn {

namespace {

bool has_active_dropout(const LayerStack& stack) {
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const Layer& l = stack.layer(i);
    if (const auto* d = dynamic_cast<const Dropout*>(&l); d && d->rate() > 0.0) return true;
    if (const auto* c = dynamic_cast<const Concat*>(&l)) {
      for (const LayerStack& b : c->branches()) {
        if (has_active_dropout(b)) return true;
      }
    }
  }
  return false;
}

void validate(const LayerStack& stack, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw std::invalid_argument("gradient_check epsilon must lie in [1e-7, 1e-3]");
  }
  if (has_active_dropout(stack)) {
    throw std::invalid_argument("gradient_check does not support stochastic dropout layers");
  }
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double gradient_check(LayerStack& stack, const Tensor& input, const LossFunction& loss,
                      double epsilon) {
  validate(stack, epsilon);
  ParameterSet params = stack.parameters();
  if (params.empty()) return 0.0;

  const GradientSet saved = params.gradients();
  params.zero_grad();
  Tensor out = stack.forward(input, true);
  stack.backward(loss(out).gradient);
  const GradientSet analytic = params.gradients();

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + epsilon;
      const double plus = loss(stack.infer(input)).loss;
      values[i] = original - epsilon;
      const double minus = loss(stack.infer(input)).loss;
      values[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        worst = std::numeric_limits<double>::infinity();
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      worst = std::max(worst, relative_error(analytic[p][i], numeric));
    }
  }
  for (std::size_t p = 0; p < params.size(); ++p) params[p].grad = saved[p];
  return worst;
}

double input_gradient_check(LayerStack& stack, const Tensor& input, const LossFunction& loss,
                            double epsilon) {
  validate(stack, epsilon);
  ParameterSet params = stack.parameters();
  const GradientSet saved = params.gradients();
  Tensor out = stack.forward(input, true);
  const Tensor analytic = stack.backward(loss(out).gradient);

  Tensor probe = input;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + epsilon;
    const double plus = loss(stack.infer(probe)).loss;
    probe[i] = original - epsilon;
    const double minus = loss(stack.infer(probe)).loss;
    probe[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      worst = std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, relative_error(analytic[i], (plus - minus) / (2.0 * epsilon)));
  }
  for (std::size_t p = 0; p < params.size(); ++p) params[p].grad = saved[p];
  return worst;
}

}  // namespace dcitl::nn

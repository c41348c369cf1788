#pragma once

#include <functional>

#include "dcitl/nn/layers.hpp"
#include "dcitl/nn/loss.hpp"

namespace dcitl::nn {

// Maps the stack output to a scalar loss and d loss / d output.
using LossFunction = std::function<LossResult(const Tensor& output)>;

// Largest |analytic - central difference| / max(1, |central difference|)
// over every parameter scalar. Returns +inf if a perturbed loss is not
// finite. Stacks containing active dropout are rejected.
double gradient_check(LayerStack& stack, const Tensor& input, const LossFunction& loss,
                      double epsilon = 1e-5);

// Same measure for d loss / d input.
double input_gradient_check(LayerStack& stack, const Tensor& input, const LossFunction& loss,
                            double epsilon = 1e-5);

}  // namespace dcitl::nn

#pragma once

#include <span>

#include "dcitl/nn/tensor.hpp"

namespace dcitl::nn {

struct LossResult {
  double loss = 0.0;
  Tensor gradient;  // d loss / d logits
};

// Mean over the batch of -log softmax(logits)[label].
LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

// sum_r w_r * -log softmax(logits_r)[label_r]; uniform 1/n weights give the
// mean loss above.
LossResult weighted_cross_entropy_loss(const Tensor& logits, std::span<const int> labels,
                                       std::span<const double> weights);

// Row-wise softmax of a [n, K] matrix.
Tensor softmax(const Tensor& logits);

// Index of the largest entry in each row; ties go to the lower index.
std::vector<int> argmax_rows(const Tensor& scores);

}  // namespace dcitl::nn

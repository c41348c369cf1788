#include "dcitl/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcitl/common/error.hpp"

namespace dcitl::nn {

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [n, K], got " + logits.shape_string());
  Tensor out = logits;
  for (std::size_t r = 0; r < out.dim(0); ++r) {
    auto y = out.row(r);
    const double top = *std::max_element(y.begin(), y.end());
    double total = 0.0;
    for (double& v : y) {
      v = std::exp(v - top);
      total += v;
    }
    for (double& v : y) v /= total;
  }
  return out;
}

LossResult weighted_cross_entropy_loss(const Tensor& logits, std::span<const int> labels,
                                       std::span<const double> weights) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || weights.size() != labels.size()) {
    throw ShapeError("cross_entropy_loss: logits " + logits.shape_string() + " vs " +
                     std::to_string(labels.size()) + " labels, " + std::to_string(weights.size()) +
                     " weights");
  }
  const std::size_t n = logits.dim(0), classes = logits.dim(1);
  LossResult result{0.0, Tensor(logits.shape())};
  for (std::size_t r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
    const auto z = logits.row(r);
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - top);
    const double log_norm = top + std::log(total);
    result.loss += (log_norm - z[static_cast<std::size_t>(label)]) * weights[r];
    auto g = result.gradient.row(r);
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(z[k] - log_norm);
      g[k] = (p - (static_cast<std::size_t>(label) == k ? 1.0 : 0.0)) * weights[r];
    }
  }
  return result;
}

LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  const double w = 1.0 / static_cast<double>(std::max<std::size_t>(labels.size(), 1));
  const std::vector<double> uniform(labels.size(), w);
  return weighted_cross_entropy_loss(logits, labels, uniform);
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw ShapeError("argmax_rows expects a matrix");
  std::vector<int> out(scores.dim(0));
  for (std::size_t r = 0; r < scores.dim(0); ++r) {
    const auto row = scores.row(r);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace dcitl::nn

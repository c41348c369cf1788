#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcitl/common/rng.hpp"
#include "dcitl/nn/gradcheck.hpp"
#include "dcitl/nn/layers.hpp"

namespace dcitl::testing {

inline nn::Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

// L = sum_i c_i y_i + 0.5 * sum_i y_i^2 with fixed random c; smooth and
// sensitive to every output element.
inline nn::LossFunction quadratic_probe_loss(std::uint64_t seed) {
  return [seed](const nn::Tensor& out) {
    Rng rng(seed);
    nn::LossResult r{0.0, nn::Tensor(out.shape())};
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double c = rng.uniform(-1.0, 1.0);
      r.loss += c * out[i] + 0.5 * out[i] * out[i];
      r.gradient[i] = c + out[i];
    }
    return r;
  };
}

// Minimum gap between the largest and second-largest value along the time
// axis of a [n, T, F] tensor; gradient checks need this away from zero.
inline double min_pool_margin(const nn::Tensor& pre_pool) {
  const std::size_t n = pre_pool.dim(0), steps = pre_pool.dim(1), feats = pre_pool.dim(2);
  double margin = INFINITY;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < feats; ++f) {
      double best = -INFINITY, second = -INFINITY;
      for (std::size_t t = 0; t < steps; ++t) {
        const double v = pre_pool.row(r)[t * feats + f];
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (steps > 1) margin = std::min(margin, best - second);
    }
  }
  return margin;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dcitl_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dcitl::testing

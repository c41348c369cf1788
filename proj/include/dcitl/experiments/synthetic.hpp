#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/nn/tensor.hpp"
#include "dcitl/text/corpus.hpp"

namespace dcitl::experiments {

// Two Gaussian classes in `dim` dimensions: the first `informative`
// coordinates have mean +separation (positive) or -separation (negative),
// the rest are pure noise. The target domain swaps the first `shifted`
// informative coordinates with the same number of noise coordinates, so a
// source model loses part of its signal but the shift is recoverable.
struct ShiftTaskConfig {
  std::size_t source_samples = 1000;
  std::size_t target_samples = 1000;  // split evenly into adaptation and test
  std::size_t dim = 20;
  std::size_t informative = 8;
  std::size_t shifted = 4;
  double separation = 0.6;

  void validate() const;
};

void to_json(nlohmann::json& j, const ShiftTaskConfig& c);
void from_json(const nlohmann::json& j, ShiftTaskConfig& c);

struct ShiftTask {
  nn::Tensor source_x;
  std::vector<int> source_y;
  nn::Tensor target_train_x;  // labels withheld
  nn::Tensor target_test_x;
  std::vector<int> target_test_y;
  std::vector<std::size_t> permutation;  // target coordinate j reads source coordinate permutation[j]
};

ShiftTask make_permutation_shift_task(const ShiftTaskConfig& config, std::uint64_t seed);

// Toy review corpus. Each token is, in order of the draws: a sentiment word
// shared by all domains, a sentiment word specific to this domain, a word of
// the opposite class, or neutral filler. Shared words transfer across
// domains; domain words do not.
struct SyntheticTextConfig {
  std::size_t positives = 200;
  std::size_t negatives = 200;
  std::size_t length = 40;
  std::size_t sentiment_words = 8;  // per class, for both the shared and the domain set
  std::size_t filler_words = 150;
  double shared_rate = 0.06;
  double domain_rate = 0.08;
  double confusion_rate = 0.03;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticTextConfig& c);
void from_json(const nlohmann::json& j, SyntheticTextConfig& c);

text::Corpus make_synthetic_reviews(const SyntheticTextConfig& config, const std::string& domain,
                                    std::uint64_t seed);

}  // namespace dcitl::experiments

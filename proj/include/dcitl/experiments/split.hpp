#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dcitl/text/corpus.hpp"

namespace dcitl::experiments {

// positives : negatives of a training split, e.g. 3:10.
struct RatioSpec {
  std::size_t positives = 10;
  std::size_t negatives = 10;

  static RatioSpec parse(std::string_view text);  // "p:n", both parts positive
  std::string str() const;
  bool balanced() const noexcept { return positives == negatives; }

  friend bool operator==(const RatioSpec&, const RatioSpec&) = default;
};

// The five training ratios of the imbalance study.
std::vector<RatioSpec> standard_ratios();

struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// Holds out a balanced test set of floor(test_fraction * smaller class)
// documents per class, then keeps every remaining negative and subsamples
// the remaining positives to exactly negatives * p / n. When that product is
// not integral the negatives are trimmed to the nearest count that makes it
// so. Missing positives raise StageError("split") with the required counts.
// Index lists are sorted.
SplitPlan make_imbalanced_split(const text::Corpus& corpus, RatioSpec ratio, double test_fraction,
                                std::uint64_t seed);

}  // namespace dcitl::experiments

#include "dcitl/experiments/split.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dcitl/common/error.hpp"
#include "dcitl/common/rng.hpp"

namespace dcitl::experiments {

RatioSpec RatioSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  auto number = [&](std::string_view part) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || end != part.data() + part.size() || v == 0) {
      throw std::invalid_argument("bad ratio '" + std::string(text) + "' (expected p:n with positive integers)");
    }
    return v;
  };
  if (colon == std::string_view::npos) number({});
  return {number(text.substr(0, colon)), number(text.substr(colon + 1))};
}

std::string RatioSpec::str() const { return std::to_string(positives) + ":" + std::to_string(negatives); }

std::vector<RatioSpec> standard_ratios() { return {{10, 10}, {1, 10}, {3, 10}, {5, 10}, {7, 10}}; }

SplitPlan make_imbalanced_split(const text::Corpus& corpus, RatioSpec ratio, double test_fraction,
                                std::uint64_t seed) {
  if (ratio.positives == 0 || ratio.negatives == 0) throw std::invalid_argument("ratio parts must be positive");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& label = corpus[i].label;
    if (!label) throw StageError("split", "document " + std::to_string(i) + " of " + corpus.domain() + " is unlabeled");
    (*label == text::kPositive ? pos : neg).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  const auto per_class = static_cast<std::size_t>(
      std::floor(test_fraction * static_cast<double>(std::min(pos.size(), neg.size()))));
  if (per_class == 0) throw StageError("split", corpus.domain() + ": too few documents for a test split");
  SplitPlan plan;
  plan.seed = seed;
  plan.test.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(per_class));
  plan.test.insert(plan.test.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(per_class));

  std::size_t n_neg = neg.size() - per_class;
  const std::size_t step = ratio.negatives / std::gcd(ratio.positives, ratio.negatives);
  n_neg -= n_neg % step;
  const std::size_t n_pos = n_neg * ratio.positives / ratio.negatives;
  const std::size_t available = pos.size() - per_class;
  if (n_neg == 0 || n_pos > available) {
    throw StageError("split", corpus.domain() + ": ratio " + ratio.str() + " needs " + std::to_string(n_pos) +
                                  " positive and " + std::to_string(n_neg) + " negative training documents, have " +
                                  std::to_string(available) + " and " + std::to_string(neg.size() - per_class));
  }
  plan.train.assign(pos.begin() + static_cast<std::ptrdiff_t>(per_class),
                    pos.begin() + static_cast<std::ptrdiff_t>(per_class + n_pos));
  plan.train.insert(plan.train.end(), neg.begin() + static_cast<std::ptrdiff_t>(per_class),
                    neg.begin() + static_cast<std::ptrdiff_t>(per_class + n_neg));
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

}  // namespace dcitl::experiments

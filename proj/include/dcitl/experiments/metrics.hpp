#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "dcitl/text/corpus.hpp"

namespace dcitl::experiments {

enum class Context { in, out, adapted };

std::string to_string(Context c);  // "In", "Out", "Adapted"
Context context_from_string(const std::string& s);

struct ClassMetrics {
  std::size_t support = 0;     // gold count
  std::size_t predicted = 0;   // predicted count
  std::size_t correct = 0;
  double accuracy = 0.0;       // correct / support (class recall)
  double precision = 0.0;      // 0 when the class is never predicted
  double f1 = 0.0;             // 0 when precision + recall is 0
  bool absent = false;         // class missing from gold; metrics forced to 0
};

struct MetricsReport {
  Context context = Context::in;
  std::size_t total = 0;
  double accuracy = 0.0;
  // confusion[gold][predicted]
  std::array<std::array<std::size_t, text::kNumClasses>, text::kNumClasses> confusion{};
  std::array<ClassMetrics, text::kNumClasses> per_class{};

  double f1_positive() const { return per_class[text::kPositive].f1; }
  double f1_negative() const { return per_class[text::kNegative].f1; }
};

// Length mismatch or empty input throws std::invalid_argument; labels
// outside {0, 1} throw std::out_of_range.
MetricsReport evaluate(std::span<const int> predictions, std::span<const int> gold, Context context = Context::in);

void to_json(nlohmann::json& j, const MetricsReport& m);
void from_json(const nlohmann::json& j, MetricsReport& m);

}  // namespace dcitl::experiments

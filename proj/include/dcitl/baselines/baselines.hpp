#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/text/tfidf.hpp"

namespace dcitl::baselines {

using text::SparseVector;

enum class BaselineKind { lr, nb, rf };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& s);

struct LogisticConfig {
  std::size_t iterations = 500;
  double l2 = 1e-4;
  // Step = step_scale / L, L the Lipschitz bound of the mean loss gradient.
  double step_scale = 1.0;
};

struct NaiveBayesConfig {
  double alpha = 1.0;  // Laplace smoothing
};

struct ForestConfig {
  std::size_t trees = 100;
  std::size_t max_depth = 16;
  std::size_t max_features = 0;  // 0 = floor(sqrt(F))
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
};

struct BaselineConfig {
  LogisticConfig lr;
  NaiveBayesConfig nb;
  ForestConfig rf;
};

void to_json(nlohmann::json& j, const BaselineConfig& c);
void from_json(const nlohmann::json& j, BaselineConfig& c);

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
};

struct NaiveBayesModel {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_likelihood;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  std::uint32_t left = 0, right = 0;
  std::array<double, 2> distribution{};
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::array<double, 2> predict(const SparseVector& x) const;
  std::size_t depth() const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::lr;
  std::size_t dimension = 0;
  std::variant<LogisticModel, NaiveBayesModel, ForestModel> params;
};

struct Prediction {
  std::vector<int> labels;
  std::vector<std::array<double, 2>> probabilities;
};

// LR and RF expect TFIDF vectors, NB raw term counts. Both classes must be
// present; otherwise std::invalid_argument.
BaselineModel train_baseline(BaselineKind kind, std::span<const SparseVector> features,
                             std::span<const int> labels, const BaselineConfig& config,
                             std::uint64_t seed);

// Ties resolve to the lower class index.
Prediction predict_baseline(const BaselineModel& model, std::span<const SparseVector> features);

nlohmann::json to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const nlohmann::json& j);

}  // namespace dcitl::baselines

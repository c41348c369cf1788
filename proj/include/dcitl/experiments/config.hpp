#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/adda/adda.hpp"
#include "dcitl/adda/models.hpp"
#include "dcitl/baselines/baselines.hpp"
#include "dcitl/dba/weights.hpp"
#include "dcitl/experiments/split.hpp"
#include "dcitl/text/embeddings.hpp"

namespace dcitl::experiments {

// lr-dis is the adversarial pipeline with the linear TFIDF extractor; adda
// and dba use the convolutional extractor over word embeddings.
enum class Method { baseline_lr, baseline_nb, baseline_rf, lr_dis, adda, dba };

std::string to_string(Method m);  // "baseline-lr", ..., "dba"
Method method_from_string(const std::string& s);
bool is_baseline(Method m);
std::vector<Method> all_methods();

// Which training splits the ratio applies to.
enum class ImbalanceSides { source, both };

struct TextConfig {
  std::size_t min_df = 2;
  text::SkipGramConfig skipgram;
};

// Versioned, human-readable run configuration (JSON).
struct RunConfig {
  static constexpr int kVersion = 1;

  std::filesystem::path data_dir = "data";
  std::vector<Method> methods = all_methods();
  std::vector<std::pair<std::string, std::string>> pairs;  // (source, target)
  std::vector<RatioSpec> ratios = standard_ratios();
  std::vector<std::uint64_t> seeds{0};
  double test_fraction = 0.2;
  ImbalanceSides imbalance_sides = ImbalanceSides::source;
  TextConfig text;
  baselines::BaselineConfig baselines;
  adda::ExtractorConfig extractor;         // adda, dba
  adda::ExtractorConfig lr_dis_extractor;  // linear variant
  adda::AdaptationConfig adaptation;
  dba::WeightingConfig dba{dba::Metric::cosine, 1e-6, dba::WeightingMode::distance};
  bool save_checkpoints = true;

  RunConfig();
  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Requires "version": 1; missing fields keep their defaults.
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const RunConfig& config);

struct ExperimentPlan {
  Method method = Method::adda;
  std::string source;
  std::string target;
  RatioSpec ratio;
  std::uint64_t seed = 0;
  adda::AdaptationConfig adaptation;  // optimizers, epochs, batch size
  dba::WeightingConfig weighting;     // used by dba; adda and lr-dis run uniform

  void validate() const;
  // runs/<method>/<source>-<target>/<p>x<n>/seed<k>
  std::filesystem::path relative_dir() const;
};

void to_json(nlohmann::json& j, const ExperimentPlan& p);

// Every (ratio, pair, seed, method) combination in that nesting order.
std::vector<ExperimentPlan> expand_grid(const RunConfig& config);

}  // namespace dcitl::experiments

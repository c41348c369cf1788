#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcitl/adda/adda.hpp"
#include "dcitl/experiments/config.hpp"
#include "dcitl/experiments/metrics.hpp"
#include "dcitl/experiments/workspace.hpp"

namespace dcitl::experiments {

struct SourceModel {
  nn::LayerStack extractor;
  nn::LayerStack head;
  double train_accuracy = 0.0;
  std::vector<adda::PretrainEpoch> curve;
};

struct RunResult {
  ExperimentPlan plan;
  std::optional<MetricsReport> in, out, adapted;
  std::string error;  // stage-tagged message; empty on success

  bool ok() const noexcept { return error.empty(); }
};

// Executes experiment stages against a workspace. Artifacts go to
// <out_dir>/<plan.relative_dir()>: metrics.json, curve CSVs, weight traces
// and (when enabled) checkpoints. Source models are cached in memory so
// methods sharing a pretraining setup reuse the identical model.
class Runner {
 public:
  explicit Runner(Workspace& workspace) : ws_(workspace) {}

  // In / Out / Adapted for one plan; throws StageError on failure.
  RunResult run(const ExperimentPlan& plan);

  // Runs every plan, recording failures per run instead of stopping.
  std::vector<RunResult> run_all(std::span<const ExperimentPlan> plans);

  RunResult run_baseline(const ExperimentPlan& plan);
  std::shared_ptr<const SourceModel> pretrain(const ExperimentPlan& plan);
  // Reads source.ckpt from the plan's run directory.
  std::shared_ptr<const SourceModel> load_source(const ExperimentPlan& plan);
  adda::AdaptResult adapt(const ExperimentPlan& plan, const SourceModel& source);
  // Reads target.ckpt from the plan's run directory.
  nn::LayerStack load_target(const ExperimentPlan& plan);
  // Scores the models and writes metrics.json.
  RunResult evaluate(const ExperimentPlan& plan, const SourceModel& source, const nn::LayerStack* adapted);

  std::filesystem::path run_dir(const ExperimentPlan& plan) const;

 private:
  struct Inputs {
    std::unique_ptr<adda::FeatureSource> source_train, source_test, target_train, target_test;
    std::size_t input_dim = 0;
  };

  const adda::ExtractorConfig& extractor_config(Method m) const;
  Inputs inputs(const ExperimentPlan& plan);

  Workspace& ws_;
  std::map<std::string, std::shared_ptr<const SourceModel>> source_cache_;
};

RunResult run_experiment(const ExperimentPlan& plan, Workspace& workspace);
std::vector<RunResult> run_grid(Workspace& workspace);

}  // namespace dcitl::experiments

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/adda/sources.hpp"
#include "dcitl/dba/weights.hpp"
#include "dcitl/nn/layers.hpp"
#include "dcitl/nn/loss.hpp"
#include "dcitl/nn/optimizer.hpp"

namespace dcitl::adda {

// Discriminator probabilities are clamped to [kClamp, 1 - kClamp] before
// taking logs; the gradient is zero where the clamp is active.
inline constexpr double kProbabilityClamp = 1e-7;

// P(source) for each row of [n, 2] domain logits.
std::vector<double> source_probability(const nn::Tensor& logits);

// Discriminator objective on stacked logits: the first n_source rows come
// from M_s, the rest from M_t.
//   -sum_i w_i log D(s_i) - mean_j log(1 - D(t_j))
// Empty source_weights means 1/n_source each.
nn::LossResult discriminator_logit_loss(const nn::Tensor& logits, std::size_t n_source,
                                        std::span<const double> source_weights = {});

// Mapping objective for M_t: -mean_j log D(t_j).
nn::LossResult mapping_logit_loss(const nn::Tensor& logits);

// Runs D over both feature batches, accumulates D's parameter gradients and
// returns the loss. The feature tensors are constants here.
double discriminator_loss(nn::LayerStack& discriminator, const nn::Tensor& source_features,
                          const nn::Tensor& target_features, std::span<const double> source_weights = {});

// Returns the mapping loss and its gradient with respect to the target
// features; D's parameter gradients are left zeroed.
nn::LossResult mapping_loss(nn::LayerStack& discriminator, const nn::Tensor& target_features);

struct AdaptationConfig {
  std::size_t pretrain_epochs = 20;
  std::size_t adapt_epochs = 10;  // 0 leaves M_t equal to M_s
  std::size_t batch_size = 10;
  nn::OptimizerConfig pretrain_optimizer{nn::OptimizerKind::adam, 1e-3};
  nn::OptimizerConfig discriminator_optimizer{nn::OptimizerKind::adam, 1e-4};
  nn::OptimizerConfig target_optimizer{nn::OptimizerKind::adam, 1e-5};
  dba::WeightingConfig weighting{dba::Metric::cosine, 1e-6, dba::WeightingMode::uniform};
  std::uint64_t seed = 0;
  std::size_t log_every = 1;  // probe cadence in epochs
  bool trace_weights = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const AdaptationConfig& c);
void from_json(const nlohmann::json& j, AdaptationConfig& c);

struct PretrainEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // on the batches as seen during the epoch
};

struct PretrainResult {
  nn::LayerStack extractor;
  nn::LayerStack head;
  double train_accuracy = 0.0;  // full pass after the last epoch
  std::vector<PretrainEpoch> curve;
};

// Supervised cross-entropy training of (M_s, C). In class_ratio weighting
// mode each mini-batch is weighted by the inverse class frequency of the
// training labels. Non-finite loss raises StageError("pretrain").
PretrainResult pretrain_source(nn::LayerStack extractor, nn::LayerStack head, const FeatureSource& source,
                               std::span<const int> labels, const AdaptationConfig& config);

// Labeled held-out data used only to report accuracy along the adaptation
// curve; never touches any update.
struct Probe {
  const nn::LayerStack* head = nullptr;
  const FeatureSource* inputs = nullptr;
  std::span<const int> labels;
};

struct AdaptEpoch {
  std::size_t epoch = 0;
  double d_loss = 0.0;
  double m_loss = 0.0;
  std::optional<double> probe_accuracy;
};

struct AdaptResult {
  nn::LayerStack target_extractor;
  nn::LayerStack discriminator;
  std::vector<AdaptEpoch> curve;
  dba::WeightTrace weight_trace;
};

// Alternates one D step and one M_t step per paired mini-batch. M_t's step
// is always assembled from per-instance gradients; the weights come from
// config.weighting (uniform for plain ADDA). M_s is only read. Source labels
// are consulted only for class_ratio weighting of D's source term.
AdaptResult adversarial_adapt(const nn::LayerStack& source_extractor, nn::LayerStack target_extractor,
                              nn::LayerStack discriminator, const FeatureSource& source,
                              std::span<const int> source_labels, const FeatureSource& target,
                              const AdaptationConfig& config, const Probe& probe = {});

// Plain ADDA with the given weighting applied to the M_t update.
AdaptResult adapt_with_dba(const nn::LayerStack& source_extractor, nn::LayerStack target_extractor,
                           nn::LayerStack discriminator, const FeatureSource& source,
                           std::span<const int> source_labels, const FeatureSource& target,
                           AdaptationConfig config, const dba::WeightingConfig& weighting,
                           const Probe& probe = {});

// argmax C(M(x)) over every sample of `inputs`.
std::vector<int> predict_target(const nn::LayerStack& extractor, const nn::LayerStack& head,
                                const FeatureSource& inputs);

void write_pretrain_curve_csv(const std::filesystem::path& path, std::span<const PretrainEpoch> curve);
void write_adapt_curve_csv(const std::filesystem::path& path, std::span<const AdaptEpoch> curve);

}  // namespace dcitl::adda

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/nn/tensor.hpp"

namespace dcitl::dba {

enum class Metric { euclidean, cosine };
enum class WeightingMode { distance, class_ratio, uniform };

// What a target instance is compared against. The default reduces the source
// batch to its centroid; mean_pairwise averages distances to every source row;
// target_batch_centroid compares against the target batch's own centroid.
enum class Reference { source_batch_centroid, mean_pairwise, target_batch_centroid };

std::string to_string(Metric m);
std::string to_string(WeightingMode m);
std::string to_string(Reference r);
Metric metric_from_string(const std::string& s);
WeightingMode weighting_mode_from_string(const std::string& s);
Reference reference_from_string(const std::string& s);

struct WeightingConfig {
  Metric metric = Metric::cosine;
  double epsilon = 1e-6;
  WeightingMode mode = WeightingMode::distance;
  Reference reference = Reference::source_batch_centroid;

  void validate() const;
};

void to_json(nlohmann::json& j, const WeightingConfig& c);
void from_json(const nlohmann::json& j, WeightingConfig& c);

// euclidean: ||a - b||; cosine: 1 - cos(a, b), and 1 if either side is zero.
double feature_distance(std::span<const double> a, std::span<const double> b, Metric metric);

struct InstanceWeights {
  std::vector<double> weights;    // non-negative, sums to one
  std::vector<double> distances;  // empty when no distance was computed
};

// Inverse-distance weights 1/(d_i + eps), normalized over the batch. Both
// feature tensors are [k, f]. Uniform mode returns 1/k for every row (and
// still reports distances for the trace).
InstanceWeights instance_weights(const nn::Tensor& target_features, const nn::Tensor& source_features,
                                 const WeightingConfig& config);

// Per-instance weights n_p/(n_p+n_n) for negatives and n_n/(n_p+n_n) for
// positives, normalized over the batch. A batch whose raw weights are all
// zero throws std::domain_error; callers resample.
std::vector<double> class_ratio_weights(std::span<const int> labels, std::size_t n_positive,
                                        std::size_t n_negative);

std::vector<double> uniform_weights(std::size_t k);

// Per-batch audit log: one CSV row per instance.
class WeightTrace {
 public:
  void record(std::size_t batch, const InstanceWeights& w);
  void write_csv(const std::filesystem::path& path) const;
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  struct Row {
    std::size_t batch, instance;
    double distance, weight;
  };
  std::vector<Row> rows_;
};

}  // namespace dcitl::dba

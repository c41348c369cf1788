#include "dcitl/dba/weights.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dcitl/text/corpus.hpp"

namespace dcitl::dba {

std::string to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "cosine"; }

std::string to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::distance: return "distance";
    case WeightingMode::class_ratio: return "class_ratio";
    case WeightingMode::uniform: return "uniform";
  }
  return "?";
}

std::string to_string(Reference r) {
  switch (r) {
    case Reference::source_batch_centroid: return "source_batch_centroid";
    case Reference::mean_pairwise: return "mean_pairwise";
    case Reference::target_batch_centroid: return "target_batch_centroid";
  }
  return "?";
}

Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw std::invalid_argument("unknown metric '" + s + "' (expected euclidean or cosine)");
}

WeightingMode weighting_mode_from_string(const std::string& s) {
  if (s == "distance") return WeightingMode::distance;
  if (s == "class_ratio") return WeightingMode::class_ratio;
  if (s == "uniform") return WeightingMode::uniform;
  throw std::invalid_argument("unknown weighting mode '" + s + "'");
}

Reference reference_from_string(const std::string& s) {
  if (s == "source_batch_centroid") return Reference::source_batch_centroid;
  if (s == "mean_pairwise") return Reference::mean_pairwise;
  if (s == "target_batch_centroid") return Reference::target_batch_centroid;
  throw std::invalid_argument("unknown reference '" + s + "'");
}

void WeightingConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("weighting epsilon must be positive");
  }
}

void to_json(nlohmann::json& j, const WeightingConfig& c) {
  j = {{"metric", to_string(c.metric)},
       {"epsilon", c.epsilon},
       {"mode", to_string(c.mode)},
       {"reference", to_string(c.reference)}};
}

void from_json(const nlohmann::json& j, WeightingConfig& c) {
  if (j.contains("metric")) c.metric = metric_from_string(j.at("metric").get<std::string>());
  c.epsilon = j.value("epsilon", c.epsilon);
  if (j.contains("mode")) c.mode = weighting_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("reference")) c.reference = reference_from_string(j.at("reference").get<std::string>());
  c.validate();
}

double feature_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("feature_distance: dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (metric == Metric::euclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  // Rounding can push |cos| a hair past 1.
  return std::max(0.0, 1.0 - std::min(1.0, cos));
}

namespace {

std::vector<double> centroid(const nn::Tensor& rows) {
  std::vector<double> c(rows.row_size(), 0.0);
  const std::size_t n = rows.shape()[0];
  for (std::size_t r = 0; r < n; ++r) {
    auto row = rows.row(r);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += row[j];
  }
  for (double& v : c) v /= static_cast<double>(n);
  return c;
}

std::vector<double> normalized(std::vector<double> raw) {
  double total = 0.0;
  for (double v : raw) total += v;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::domain_error("degenerate instance weights (raw weights sum to " + std::to_string(total) + ")");
  }
  for (double& v : raw) v /= total;
  return raw;
}

}  // namespace

InstanceWeights instance_weights(const nn::Tensor& target_features, const nn::Tensor& source_features,
                                 const WeightingConfig& config) {
  config.validate();
  if (target_features.shape().size() != 2 || source_features.shape().size() != 2) {
    throw std::invalid_argument("instance_weights expects [k, f] feature matrices");
  }
  if (target_features.shape()[1] != source_features.shape()[1]) {
    throw std::invalid_argument("instance_weights: feature dimensions differ");
  }
  if (!target_features.all_finite() || !source_features.all_finite()) {
    throw std::domain_error("instance_weights: non-finite features");
  }
  const std::size_t k = target_features.shape()[0];
  InstanceWeights out;
  out.distances.resize(k);
  if (config.reference == Reference::mean_pairwise) {
    const std::size_t m = source_features.shape()[0];
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        s += feature_distance(target_features.row(i), source_features.row(j), config.metric);
      }
      out.distances[i] = s / static_cast<double>(m);
    }
  } else {
    const auto ref = centroid(config.reference == Reference::source_batch_centroid ? source_features
                                                                                  : target_features);
    for (std::size_t i = 0; i < k; ++i) {
      out.distances[i] = feature_distance(target_features.row(i), ref, config.metric);
    }
  }
  if (config.mode == WeightingMode::distance) {
    std::vector<double> raw(k);
    for (std::size_t i = 0; i < k; ++i) raw[i] = 1.0 / (out.distances[i] + config.epsilon);
    out.weights = normalized(std::move(raw));
  } else {
    out.weights = uniform_weights(k);
  }
  return out;
}

std::vector<double> class_ratio_weights(std::span<const int> labels, std::size_t n_positive,
                                        std::size_t n_negative) {
  if (n_positive + n_negative == 0) throw std::invalid_argument("class_ratio_weights: empty class counts");
  if (labels.empty()) throw std::invalid_argument("class_ratio_weights: empty batch");
  const double total = static_cast<double>(n_positive + n_negative);
  std::vector<double> raw;
  raw.reserve(labels.size());
  for (int y : labels) {
    if (y == text::kNegative) raw.push_back(static_cast<double>(n_positive) / total);
    else if (y == text::kPositive) raw.push_back(static_cast<double>(n_negative) / total);
    else throw std::invalid_argument("class_ratio_weights: label " + std::to_string(y) + " is not pos/neg");
  }
  return normalized(std::move(raw));
}

std::vector<double> uniform_weights(std::size_t k) {
  if (k == 0) throw std::invalid_argument("uniform_weights: empty batch");
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

void WeightTrace::record(std::size_t batch, const InstanceWeights& w) {
  for (std::size_t i = 0; i < w.weights.size(); ++i) {
    const double d = i < w.distances.size() ? w.distances[i] : std::nan("");
    rows_.push_back({batch, i, d, w.weights[i]});
  }
}

void WeightTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write weight trace to " + path.string());
  out << "batch,instance,distance,weight\n";
  char buf[64];
  for (const Row& r : rows_) {
    out << r.batch << ',' << r.instance << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.distance);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.weight);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("failed writing weight trace to " + path.string());
}

}  // namespace dcitl::dba

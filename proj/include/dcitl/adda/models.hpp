#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/nn/layers.hpp"

namespace dcitl::adda {

enum class ExtractorVariant { cnn, linear };

std::string to_string(ExtractorVariant v);
ExtractorVariant extractor_variant_from_string(const std::string& s);

struct ExtractorConfig {
  ExtractorVariant variant = ExtractorVariant::cnn;
  // cnn: sequences of max_len embedding rows.
  std::size_t max_len = 140;
  std::vector<std::size_t> widths{3, 4, 5};
  std::size_t filters = 32;
  // linear: |V| -> hidden[0] -> hidden[1] -> ...
  std::vector<std::size_t> hidden{256, 64};

  void validate() const;
};

void to_json(nlohmann::json& j, const ExtractorConfig& c);
void from_json(const nlohmann::json& j, ExtractorConfig& c);

// input_dim is the embedding width for cnn and the vocabulary size for linear.
nn::LayerStack make_extractor(const ExtractorConfig& config, std::size_t input_dim);
std::size_t extractor_output_dim(const ExtractorConfig& config);

// Class scores over K classes. The softmax is folded into the loss and the
// argmax, so the stack ends at the logits.
nn::LayerStack make_classifier_head(std::size_t feature_dim, std::size_t classes = 2);

// feature -> 64 -> relu -> 64 -> relu -> 2 domain logits (column 0 = source).
nn::LayerStack make_discriminator(std::size_t feature_dim, std::size_t hidden = 64);

}  // namespace dcitl::adda

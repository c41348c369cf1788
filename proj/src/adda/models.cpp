#include "dcitl/adda/models.hpp"

#include <stdexcept>

namespace dcitl::adda {

std::string to_string(ExtractorVariant v) { return v == ExtractorVariant::cnn ? "cnn" : "linear"; }

ExtractorVariant extractor_variant_from_string(const std::string& s) {
  if (s == "cnn") return ExtractorVariant::cnn;
  if (s == "linear") return ExtractorVariant::linear;
  throw std::invalid_argument("unknown extractor variant '" + s + "' (expected cnn or linear)");
}

void ExtractorConfig::validate() const {
  if (variant == ExtractorVariant::cnn) {
    if (widths.empty() || filters == 0) throw std::invalid_argument("cnn extractor needs widths and filters");
    for (auto w : widths) {
      if (w == 0 || w > max_len) throw std::invalid_argument("conv width must lie in [1, max_len]");
    }
  } else {
    if (hidden.empty()) throw std::invalid_argument("linear extractor needs at least one layer");
    for (auto h : hidden) {
      if (h == 0) throw std::invalid_argument("linear layer width must be positive");
    }
  }
}

void to_json(nlohmann::json& j, const ExtractorConfig& c) {
  j = {{"variant", to_string(c.variant)}, {"max_len", c.max_len}, {"widths", c.widths},
       {"filters", c.filters},            {"hidden", c.hidden}};
}

void from_json(const nlohmann::json& j, ExtractorConfig& c) {
  if (j.contains("variant")) c.variant = extractor_variant_from_string(j.at("variant").get<std::string>());
  c.max_len = j.value("max_len", c.max_len);
  c.widths = j.value("widths", c.widths);
  c.filters = j.value("filters", c.filters);
  c.hidden = j.value("hidden", c.hidden);
  c.validate();
}

nn::LayerStack make_extractor(const ExtractorConfig& config, std::size_t input_dim) {
  config.validate();
  if (input_dim == 0) throw std::invalid_argument("extractor input dimension must be positive");
  nn::LayerStack stack;
  if (config.variant == ExtractorVariant::cnn) {
    std::vector<nn::LayerStack> branches;
    for (auto w : config.widths) {
      nn::LayerStack b;
      b.emplace<nn::Conv1d>(input_dim, w, config.filters).emplace<nn::Relu>().emplace<nn::MaxPoolOverTime>();
      branches.push_back(std::move(b));
    }
    stack.emplace<nn::Concat>(std::move(branches));
  } else {
    std::size_t in = input_dim;
    for (auto h : config.hidden) {
      stack.emplace<nn::Linear>(in, h);
      in = h;
    }
  }
  return stack;
}

std::size_t extractor_output_dim(const ExtractorConfig& config) {
  return config.variant == ExtractorVariant::cnn ? config.widths.size() * config.filters
                                                 : config.hidden.back();
}

nn::LayerStack make_classifier_head(std::size_t feature_dim, std::size_t classes) {
  nn::LayerStack head;
  head.emplace<nn::Linear>(feature_dim, classes);
  return head;
}

nn::LayerStack make_discriminator(std::size_t feature_dim, std::size_t hidden) {
  nn::LayerStack d;
  d.emplace<nn::Linear>(feature_dim, hidden)
      .emplace<nn::Relu>()
      .emplace<nn::Linear>(hidden, hidden)
      .emplace<nn::Relu>()
      .emplace<nn::Linear>(hidden, 2);
  return d;
}

}  // namespace dcitl::adda

#include "dcitl/experiments/metrics.hpp"

#include <stdexcept>

namespace dcitl::experiments {

std::string to_string(Context c) {
  switch (c) {
    case Context::in: return "In";
    case Context::out: return "Out";
    case Context::adapted: return "Adapted";
  }
  return "?";
}

Context context_from_string(const std::string& s) {
  if (s == "In") return Context::in;
  if (s == "Out") return Context::out;
  if (s == "Adapted") return Context::adapted;
  throw std::invalid_argument("unknown evaluation context '" + s + "'");
}

MetricsReport evaluate(std::span<const int> predictions, std::span<const int> gold, Context context) {
  if (predictions.size() != gold.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) + " predictions vs " +
                                std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) throw std::invalid_argument("evaluate: empty input");
  MetricsReport m;
  m.context = context;
  m.total = gold.size();
  auto check = [](int y) {
    if (y < 0 || y >= text::kNumClasses) throw std::out_of_range("label " + std::to_string(y) + " outside {0, 1}");
    return static_cast<std::size_t>(y);
  };
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t g = check(gold[i]), p = check(predictions[i]);
    ++m.confusion[g][p];
    correct += g == p;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  for (std::size_t c = 0; c < text::kNumClasses; ++c) {
    ClassMetrics& cm = m.per_class[c];
    cm.correct = m.confusion[c][c];
    for (std::size_t k = 0; k < text::kNumClasses; ++k) {
      cm.support += m.confusion[c][k];
      cm.predicted += m.confusion[k][c];
    }
    cm.absent = cm.support == 0;
    if (cm.absent) continue;
    cm.accuracy = static_cast<double>(cm.correct) / static_cast<double>(cm.support);
    cm.precision = cm.predicted == 0 ? 0.0 : static_cast<double>(cm.correct) / static_cast<double>(cm.predicted);
    const double denom = cm.precision + cm.accuracy;
    cm.f1 = denom == 0.0 ? 0.0 : 2.0 * cm.precision * cm.accuracy / denom;
  }
  return m;
}

void to_json(nlohmann::json& j, const MetricsReport& m) {
  j = {{"context", to_string(m.context)}, {"total", m.total}, {"accuracy", m.accuracy}, {"confusion", m.confusion}};
  for (int c = 0; c < text::kNumClasses; ++c) {
    const ClassMetrics& cm = m.per_class[static_cast<std::size_t>(c)];
    j["classes"][std::string(text::label_name(c))] = {
        {"support", cm.support},     {"predicted", cm.predicted}, {"correct", cm.correct}, {"accuracy", cm.accuracy},
        {"precision", cm.precision}, {"f1", cm.f1},               {"absent", cm.absent}};
  }
}

void from_json(const nlohmann::json& j, MetricsReport& m) {
  m.context = context_from_string(j.at("context").get<std::string>());
  m.total = j.at("total").get<std::size_t>();
  m.accuracy = j.at("accuracy").get<double>();
  m.confusion = j.at("confusion").get<decltype(m.confusion)>();
  for (int c = 0; c < text::kNumClasses; ++c) {
    const auto& e = j.at("classes").at(std::string(text::label_name(c)));
    ClassMetrics& cm = m.per_class[static_cast<std::size_t>(c)];
    cm.support = e.at("support").get<std::size_t>();
    cm.predicted = e.at("predicted").get<std::size_t>();
    cm.correct = e.at("correct").get<std::size_t>();
    cm.accuracy = e.at("accuracy").get<double>();
    cm.precision = e.at("precision").get<double>();
    cm.f1 = e.at("f1").get<double>();
    cm.absent = e.at("absent").get<bool>();
  }
}

}  // namespace dcitl::experiments

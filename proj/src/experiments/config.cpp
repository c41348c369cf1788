#include "dcitl/experiments/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dcitl/common/rng.hpp"

namespace dcitl::experiments {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::baseline_lr, "baseline-lr"}, {Method::baseline_nb, "baseline-nb"}, {Method::baseline_rf, "baseline-rf"},
    {Method::lr_dis, "lr-dis"},           {Method::adda, "adda"},               {Method::dba, "dba"}};

}  // namespace

std::string to_string(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  for (const auto& [method, name] : kMethodNames) {
    if (s == name) return method;
  }
  throw std::invalid_argument("unknown method '" + s + "'");
}

bool is_baseline(Method m) {
  return m == Method::baseline_lr || m == Method::baseline_nb || m == Method::baseline_rf;
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& entry : kMethodNames) out.push_back(entry.first);
  return out;
}

RunConfig::RunConfig() {
  lr_dis_extractor.variant = adda::ExtractorVariant::linear;
  adaptation.pretrain_epochs = 10;
  adaptation.adapt_epochs = 10;
}

void RunConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("config: no methods");
  if (pairs.empty()) throw std::invalid_argument("config: no domain pairs");
  if (ratios.empty()) throw std::invalid_argument("config: no ratios");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("config: test_fraction outside (0, 1)");
  for (const auto& [s, t] : pairs) {
    if (s.empty() || t.empty()) throw std::invalid_argument("config: empty domain name");
  }
  extractor.validate();
  lr_dis_extractor.validate();
  if (lr_dis_extractor.variant != adda::ExtractorVariant::linear) {
    throw std::invalid_argument("config: lr_dis_extractor must be the linear variant");
  }
  adaptation.validate();
  dba.validate();
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  std::vector<std::string> methods, ratios;
  for (Method m : c.methods) methods.push_back(to_string(m));
  for (const RatioSpec& r : c.ratios) ratios.push_back(r.str());
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [s, t] : c.pairs) pairs.push_back({s, t});
  j = {{"version", RunConfig::kVersion},
       {"data_dir", c.data_dir.generic_string()},
       {"methods", methods},
       {"pairs", pairs},
       {"ratios", ratios},
       {"seeds", c.seeds},
       {"split", {{"test_fraction", c.test_fraction},
                  {"imbalance_sides", c.imbalance_sides == ImbalanceSides::source ? "source" : "both"}}},
       {"text", {{"min_df", c.text.min_df}, {"skipgram", c.text.skipgram}}},
       {"baselines", c.baselines},
       {"extractor", c.extractor},
       {"lr_dis_extractor", c.lr_dis_extractor},
       {"adaptation", c.adaptation},
       {"dba", c.dba},
       {"save_checkpoints", c.save_checkpoints}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  if (!j.contains("version") || j.at("version") != RunConfig::kVersion) {
    throw std::invalid_argument("config: unsupported or missing version (expected " +
                                std::to_string(RunConfig::kVersion) + ")");
  }
  static const std::vector<std::string> known{"version",   "data_dir",   "methods",  "pairs",     "ratios",
                                              "seeds",     "split",      "text",     "baselines", "extractor",
                                              "lr_dis_extractor", "adaptation", "dba", "save_checkpoints"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  if (j.contains("pairs")) {
    c.pairs.clear();
    for (const auto& p : j.at("pairs")) {
      if (!p.is_array() || p.size() != 2) throw std::invalid_argument("config: each pair is [source, target]");
      c.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
  }
  if (j.contains("ratios")) {
    c.ratios.clear();
    for (const auto& r : j.at("ratios")) c.ratios.push_back(RatioSpec::parse(r.get<std::string>()));
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("split")) {
    const auto& s = j.at("split");
    c.test_fraction = s.value("test_fraction", c.test_fraction);
    if (s.contains("imbalance_sides")) {
      const auto sides = s.at("imbalance_sides").get<std::string>();
      if (sides == "source") c.imbalance_sides = ImbalanceSides::source;
      else if (sides == "both") c.imbalance_sides = ImbalanceSides::both;
      else throw std::invalid_argument("config: imbalance_sides must be source or both");
    }
  }
  if (j.contains("text")) {
    const auto& t = j.at("text");
    c.text.min_df = t.value("min_df", c.text.min_df);
    if (t.contains("skipgram")) t.at("skipgram").get_to(c.text.skipgram);
  }
  if (j.contains("baselines")) j.at("baselines").get_to(c.baselines);
  if (j.contains("extractor")) j.at("extractor").get_to(c.extractor);
  if (j.contains("lr_dis_extractor")) j.at("lr_dis_extractor").get_to(c.lr_dis_extractor);
  if (j.contains("adaptation")) j.at("adaptation").get_to(c.adaptation);
  if (j.contains("dba")) j.at("dba").get_to(c.dba);
  c.save_checkpoints = j.value("save_checkpoints", c.save_checkpoints);
  c.validate();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return j.get<RunConfig>();
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << nlohmann::json(config).dump(2) << '\n';
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(nlohmann::json(config).dump())));
  return buf;
}

void ExperimentPlan::validate() const {
  if (source.empty() || target.empty()) throw std::invalid_argument("plan: empty domain name");
  if (!is_baseline(method) && source == target) {
    throw std::invalid_argument("plan: adaptation needs distinct source and target domains");
  }
  adaptation.validate();
  weighting.validate();
}

std::filesystem::path ExperimentPlan::relative_dir() const {
  return std::filesystem::path("runs") / to_string(method) / (source + "-" + target) /
         (std::to_string(ratio.positives) + "x" + std::to_string(ratio.negatives)) / ("seed" + std::to_string(seed));
}

void to_json(nlohmann::json& j, const ExperimentPlan& p) {
  j = {{"method", to_string(p.method)}, {"source", p.source},         {"target", p.target},
       {"ratio", p.ratio.str()},         {"seed", p.seed},             {"adaptation", p.adaptation},
       {"weighting", p.weighting}};
}

std::vector<ExperimentPlan> expand_grid(const RunConfig& config) {
  config.validate();
  std::vector<ExperimentPlan> plans;
  for (const RatioSpec& ratio : config.ratios) {
    for (const auto& [source, target] : config.pairs) {
      for (std::uint64_t seed : config.seeds) {
        for (Method m : config.methods) {
          ExperimentPlan p;
          p.method = m;
          p.source = source;
          p.target = target;
          p.ratio = ratio;
          p.seed = seed;
          p.adaptation = config.adaptation;
          p.adaptation.seed = seed;
          p.weighting = m == Method::dba ? config.dba : config.adaptation.weighting;
          if (m != Method::dba) p.weighting.mode = dba::WeightingMode::uniform;
          plans.push_back(std::move(p));
        }
      }
    }
  }
  return plans;
}

}  // namespace dcitl::experiments

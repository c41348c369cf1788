#include "dcitl/experiments/runner.hpp"

#include <fstream>

#include "dcitl/adda/models.hpp"
#include "dcitl/baselines/baselines.hpp"
#include "dcitl/common/error.hpp"
#include "dcitl/common/rng.hpp"
#include "dcitl/nn/checkpoint.hpp"

namespace dcitl::experiments {

namespace {

baselines::BaselineKind baseline_kind(Method m) {
  switch (m) {
    case Method::baseline_lr: return baselines::BaselineKind::lr;
    case Method::baseline_nb: return baselines::BaselineKind::nb;
    case Method::baseline_rf: return baselines::BaselineKind::rf;
    default: throw std::invalid_argument(to_string(m) + " is not a baseline method");
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<text::SparseVector> counts(const text::Vocabulary& vocab, const text::Corpus& c) {
  std::vector<text::SparseVector> out;
  out.reserve(c.size());
  for (const auto& d : c.documents()) out.push_back(text::count_vectorize(vocab, d));
  return out;
}

// Runs `fn`, converting anything that is not already stage-tagged.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

adda::AdaptationConfig stage_config(const ExperimentPlan& plan) {
  adda::AdaptationConfig cfg = plan.adaptation;
  cfg.seed = plan.seed;
  cfg.weighting = plan.weighting;
  return cfg;
}

}  // namespace

std::filesystem::path Runner::run_dir(const ExperimentPlan& plan) const {
  return ws_.out_dir() / plan.relative_dir();
}

const adda::ExtractorConfig& Runner::extractor_config(Method m) const {
  return m == Method::lr_dis ? ws_.config().lr_dis_extractor : ws_.config().extractor;
}

Runner::Inputs Runner::inputs(const ExperimentPlan& plan) {
  auto data = ws_.prepare(plan.source, plan.target, plan.ratio, plan.seed);
  const adda::ExtractorConfig& ec = extractor_config(plan.method);
  Inputs in;
  if (ec.variant == adda::ExtractorVariant::linear) {
    in.source_train = std::make_unique<adda::SparseSource>(data->source_train_tfidf);
    in.source_test = std::make_unique<adda::SparseSource>(data->source_test_tfidf);
    in.target_train = std::make_unique<adda::SparseSource>(data->target_train_tfidf);
    in.target_test = std::make_unique<adda::SparseSource>(data->target_test_tfidf);
    in.input_dim = data->vocab.size();
    return in;
  }
  auto table = ws_.embeddings(*data);
  auto encode = [&](const text::Corpus& c) {
    std::vector<std::vector<std::uint32_t>> ids;
    ids.reserve(c.size());
    for (const auto& d : c.documents()) ids.push_back(data->vocab.encode(d));
    return std::make_unique<adda::SequenceSource>(std::move(ids), table, ec.max_len);
  };
  in.source_train = encode(data->source_train);
  in.source_test = encode(data->source_test);
  in.target_train = encode(data->target_train);
  in.target_test = encode(data->target_test);
  in.input_dim = table->dim();
  return in;
}

RunResult Runner::run_baseline(const ExperimentPlan& plan) {
  auto data = in_stage("prepare", [&] { return ws_.prepare(plan.source, plan.target, plan.ratio, plan.seed); });
  const auto dir = run_dir(plan);
  std::filesystem::create_directories(dir);
  const baselines::BaselineKind kind = baseline_kind(plan.method);
  const bool raw = kind == baselines::BaselineKind::nb;
  const auto train_x = raw ? counts(data->vocab, data->source_train) : data->source_train_tfidf;
  const auto source_x = raw ? counts(data->vocab, data->source_test) : data->source_test_tfidf;
  const auto target_x = raw ? counts(data->vocab, data->target_test) : data->target_test_tfidf;
  const baselines::BaselineModel model = in_stage("baseline", [&] {
    return baselines::train_baseline(kind, train_x, data->source_train_y, ws_.config().baselines,
                                     mix_seed(plan.seed, "baseline"));
  });
  RunResult r{plan, {}, {}, {}, {}};
  in_stage("eval", [&] {
    r.in = experiments::evaluate(baselines::predict_baseline(model, source_x).labels, data->source_test_y, Context::in);
    r.out = experiments::evaluate(baselines::predict_baseline(model, target_x).labels, data->target_test_y, Context::out);
    return 0;
  });
  if (ws_.config().save_checkpoints) write_json(dir / "baseline.json", baselines::to_json(model));
  write_json(dir / "metrics.json", {{"plan", plan}, {"In", *r.in}, {"Out", *r.out}});
  return r;
}

std::shared_ptr<const SourceModel> Runner::pretrain(const ExperimentPlan& plan) {
  plan.validate();
  auto data = in_stage("prepare", [&] { return ws_.prepare(plan.source, plan.target, plan.ratio, plan.seed); });
  const adda::ExtractorConfig& ec = extractor_config(plan.method);
  const adda::AdaptationConfig cfg = stage_config(plan);
  const bool class_ratio = cfg.weighting.mode == dba::WeightingMode::class_ratio;
  const nlohmann::json key_json = {{"data", data->key},
                                   {"extractor", ec},
                                   {"epochs", cfg.pretrain_epochs},
                                   {"batch", cfg.batch_size},
                                   {"optimizer", cfg.pretrain_optimizer},
                                   {"class_ratio", class_ratio}};
  const std::string key = key_json.dump();
  std::shared_ptr<const SourceModel> model;
  if (auto it = source_cache_.find(key); it != source_cache_.end()) {
    model = it->second;
  } else {
    Inputs in = in_stage("prepare", [&] { return inputs(plan); });
    ws_.log("pretraining " + to_string(ec.variant) + " source model for " + plan.source + " " + plan.ratio.str() +
            " seed " + std::to_string(plan.seed));
    nn::LayerStack extractor = adda::make_extractor(ec, in.input_dim);
    extractor.initialize(mix_seed(plan.seed, "init-extractor"));
    nn::LayerStack head = adda::make_classifier_head(adda::extractor_output_dim(ec));
    head.initialize(mix_seed(plan.seed, "init-head"));
    adda::PretrainResult pre = in_stage("pretrain", [&] {
      return adda::pretrain_source(std::move(extractor), std::move(head), *in.source_train, data->source_train_y, cfg);
    });
    auto sm = std::make_shared<SourceModel>();
    sm->extractor = std::move(pre.extractor);
    sm->head = std::move(pre.head);
    sm->train_accuracy = pre.train_accuracy;
    sm->curve = std::move(pre.curve);
    model = sm;
    source_cache_.emplace(key, model);
  }
  const auto dir = run_dir(plan);
  std::filesystem::create_directories(dir);
  adda::write_pretrain_curve_csv(dir / "pretrain_curve.csv", model->curve);
  if (ws_.config().save_checkpoints) {
    nn::Checkpoint ck;
    ck.seed = plan.seed;
    ck.meta = {{"plan", plan}, {"stage", "pretrain"}, {"train_accuracy", model->train_accuracy}};
    ck.models.emplace("extractor", model->extractor);
    ck.models.emplace("head", model->head);
    ck.save(dir / "source.ckpt");
  }
  return model;
}

std::shared_ptr<const SourceModel> Runner::load_source(const ExperimentPlan& plan) {
  const auto path = run_dir(plan) / "source.ckpt";
  if (!std::filesystem::exists(path)) throw StageError("load", "no source checkpoint at " + path.string());
  return in_stage("load", [&] {
    nn::Checkpoint ck = nn::Checkpoint::load(path);
    auto sm = std::make_shared<SourceModel>();
    sm->extractor = std::move(ck.models.at("extractor"));
    sm->head = std::move(ck.models.at("head"));
    sm->train_accuracy = ck.meta.value("train_accuracy", 0.0);
    return std::shared_ptr<const SourceModel>(sm);
  });
}

adda::AdaptResult Runner::adapt(const ExperimentPlan& plan, const SourceModel& source) {
  plan.validate();
  auto data = in_stage("prepare", [&] { return ws_.prepare(plan.source, plan.target, plan.ratio, plan.seed); });
  Inputs in = in_stage("prepare", [&] { return inputs(plan); });
  const adda::ExtractorConfig& ec = extractor_config(plan.method);
  adda::AdaptationConfig cfg = stage_config(plan);
  nn::LayerStack d = adda::make_discriminator(adda::extractor_output_dim(ec));
  d.initialize(mix_seed(plan.seed, "init-discriminator"));
  const adda::Probe probe{&source.head, in.target_test.get(), data->target_test_y};
  ws_.log("adapting " + to_string(plan.method) + " " + plan.source + "->" + plan.target + " " + plan.ratio.str() +
          " seed " + std::to_string(plan.seed));
  adda::AdaptResult result = in_stage("adapt", [&] {
    return adda::adversarial_adapt(source.extractor, source.extractor, std::move(d), *in.source_train,
                                   data->source_train_y, *in.target_train, cfg, probe);
  });
  const auto dir = run_dir(plan);
  std::filesystem::create_directories(dir);
  adda::write_adapt_curve_csv(dir / "adapt_curve.csv", result.curve);
  if (cfg.trace_weights) result.weight_trace.write_csv(dir / "weights.csv");
  if (ws_.config().save_checkpoints) {
    nn::Checkpoint ck;
    ck.seed = plan.seed;
    ck.meta = {{"plan", plan}, {"stage", "adapt"}};
    ck.models.emplace("target_extractor", result.target_extractor);
    ck.models.emplace("discriminator", result.discriminator);
    ck.save(dir / "target.ckpt");
  }
  return result;
}

nn::LayerStack Runner::load_target(const ExperimentPlan& plan) {
  const auto path = run_dir(plan) / "target.ckpt";
  if (!std::filesystem::exists(path)) throw StageError("load", "no target checkpoint at " + path.string());
  return in_stage("load", [&] { return std::move(nn::Checkpoint::load(path).models.at("target_extractor")); });
}

RunResult Runner::evaluate(const ExperimentPlan& plan, const SourceModel& source, const nn::LayerStack* adapted) {
  auto data = in_stage("prepare", [&] { return ws_.prepare(plan.source, plan.target, plan.ratio, plan.seed); });
  Inputs in = in_stage("prepare", [&] { return inputs(plan); });
  RunResult r{plan, {}, {}, {}, {}};
  in_stage("eval", [&] {
    r.in = experiments::evaluate(adda::predict_target(source.extractor, source.head, *in.source_test), data->source_test_y,
                           Context::in);
    r.out = experiments::evaluate(adda::predict_target(source.extractor, source.head, *in.target_test),
                            data->target_test_y, Context::out);
    if (adapted) {
      r.adapted = experiments::evaluate(adda::predict_target(*adapted, source.head, *in.target_test), data->target_test_y,
                                  Context::adapted);
    }
    return 0;
  });
  const auto dir = run_dir(plan);
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"plan", plan}, {"source_train_accuracy", source.train_accuracy}, {"In", *r.in}, {"Out", *r.out}};
  if (r.adapted) j["Adapted"] = *r.adapted;
  write_json(dir / "metrics.json", j);
  return r;
}

RunResult Runner::run(const ExperimentPlan& plan) {
  if (is_baseline(plan.method)) return run_baseline(plan);
  auto source = pretrain(plan);
  adda::AdaptResult adapted = adapt(plan, *source);
  return evaluate(plan, *source, &adapted.target_extractor);
}

std::vector<RunResult> Runner::run_all(std::span<const ExperimentPlan> plans) {
  std::vector<RunResult> results;
  results.reserve(plans.size());
  for (const ExperimentPlan& plan : plans) {
    try {
      results.push_back(run(plan));
    } catch (const std::exception& e) {
      ws_.log("run failed: " + std::string(e.what()));
      results.push_back({plan, {}, {}, {}, e.what()});
    }
  }
  return results;
}

RunResult run_experiment(const ExperimentPlan& plan, Workspace& workspace) {
  Runner runner(workspace);
  return runner.run(plan);
}

std::vector<RunResult> run_grid(Workspace& workspace) {
  Runner runner(workspace);
  const std::vector<ExperimentPlan> plans = expand_grid(workspace.config());
  return runner.run_all(plans);
}

}  // namespace dcitl::experiments

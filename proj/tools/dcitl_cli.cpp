#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dcitl/common/error.hpp"
#include "dcitl/experiments/config.hpp"
#include "dcitl/experiments/report.hpp"
#include "dcitl/experiments/runner.hpp"
#include "dcitl/experiments/synthetic.hpp"
#include "dcitl/experiments/workspace.hpp"

using namespace dcitl;
using namespace dcitl::experiments;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string out_dir = "out";
  std::string format = "all";
  std::vector<std::string> methods;
  std::vector<std::string> ratios;
  std::string source, target;
  bool quiet = false;
};

RunConfig effective_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (!o.data_dir.empty()) c.data_dir = o.data_dir;
  if (o.seed) c.seeds = {*o.seed};
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(method_from_string(m));
  }
  if (!o.ratios.empty()) {
    c.ratios.clear();
    for (const auto& r : o.ratios) c.ratios.push_back(RatioSpec::parse(r));
  }
  if (!o.source.empty() && !o.target.empty()) {
    c.pairs = {{o.source, o.target}};
  } else if (!o.source.empty() || !o.target.empty()) {
    std::erase_if(c.pairs, [&](const auto& p) {
      return (!o.source.empty() && p.first != o.source) || (!o.target.empty() && p.second != o.target);
    });
  }
  if (c.pairs.empty()) throw std::invalid_argument("no domain pairs: give --source and --target or list pairs in --config");
  c.validate();
  return c;
}

std::vector<ReportFormat> formats(const std::string& f) {
  if (f == "all") return {ReportFormat::csv, ReportFormat::markdown, ReportFormat::plotdata};
  return {report_format_from_string(f)};
}

std::vector<ExperimentPlan> select(const RunConfig& c, bool baselines) {
  std::vector<ExperimentPlan> plans;
  for (auto& p : expand_grid(c))
    if (is_baseline(p.method) == baselines) plans.push_back(std::move(p));
  return plans;
}

void finish(const std::string& command, const Options& o, const RunConfig& c) {
  save_run_config(c, std::filesystem::path(o.out_dir) / "config.json");
  write_manifest(o.out_dir, {command, config_hash(c), c.seeds});
}

// Reports every result and returns how many runs failed.
int report_results(const std::vector<RunResult>& results, const Options& o) {
  const auto rows = to_rows(results);
  for (auto f : formats(o.format)) emit_report(o.out_dir, rows, f);
  int failed = 0;
  for (const auto& r : results) {
    if (r.ok()) continue;
    ++failed;
    std::cerr << "failed: " << r.plan.relative_dir().generic_string() << ": " << r.error << '\n';
  }
  if (!o.quiet) std::cout << format_markdown(summarize(rows));
  return failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance-based domain adaptation for imbalanced sentiment classification"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Use this single seed instead of the configured list");
  app.add_option("--data-dir", o.data_dir, "Directory holding <domain>.tsv or <domain>/{positive,negative}.review");
  app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", o.format, "Report format: csv, markdown, plotdata or all")
      ->check(CLI::IsMember({"csv", "markdown", "plotdata", "all"}))
      ->capture_default_str();
  app.add_option("--method", o.methods, "Restrict to these methods (repeatable)");
  app.add_option("--ratio", o.ratios, "Restrict to these ratios, e.g. 3:10 (repeatable)");
  app.add_option("--source", o.source, "Source domain");
  app.add_option("--target", o.target, "Target domain");
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress and tables");

  auto* embed = app.add_subcommand("embed", "Train and cache skip-gram embeddings for each pair, ratio and seed");
  auto* baseline = app.add_subcommand("baseline", "Train and score the LR, NB and RF baselines");
  auto* pretrain = app.add_subcommand("pretrain", "Train source extractor and classifier, save source.ckpt");
  auto* adapt = app.add_subcommand("adapt", "Adversarially adapt from source.ckpt, save target.ckpt");
  auto* eval = app.add_subcommand("eval", "Score In / Out / Adapted from saved checkpoints");
  auto* grid = app.add_subcommand("grid", "Run every configured method, pair, ratio and seed");
  auto* report = app.add_subcommand("report", "Re-emit reports from <out-dir>/results.csv");
  std::vector<std::string> synth_domains{"books", "dvd", "electronics", "kitchen"};
  SyntheticTextConfig synth_cfg;
  auto* synth = app.add_subcommand("synth", "Write synthetic <domain>.tsv corpora into --data-dir");
  synth->add_option("domains", synth_domains, "Domain names")->capture_default_str();
  synth->add_option("--positives", synth_cfg.positives)->capture_default_str();
  synth->add_option("--negatives", synth_cfg.negatives)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    std::filesystem::create_directories(o.out_dir);
    if (synth->parsed()) {
      stage = "synth";
      if (o.data_dir.empty()) throw std::invalid_argument("synth needs --data-dir");
      synth_cfg.validate();
      std::filesystem::create_directories(o.data_dir);
      const std::uint64_t seed = o.seed.value_or(0);
      for (const auto& d : synth_domains) {
        const auto path = std::filesystem::path(o.data_dir) / (d + ".tsv");
        text::save_tsv(make_synthetic_reviews(synth_cfg, d, seed), path);
        if (!o.quiet) std::cout << path.generic_string() << '\n';
      }
      return 0;
    }
    if (report->parsed()) {
      stage = "report";
      const auto rows = read_results_csv(std::filesystem::path(o.out_dir) / "results.csv");
      for (auto f : formats(o.format))
        if (f != ReportFormat::csv) emit_report(o.out_dir, rows, f);
      if (!o.quiet) std::cout << format_markdown(summarize(rows));
      RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
      write_manifest(o.out_dir, {"report", config_hash(c), c.seeds});
      return 0;
    }

    RunConfig config = effective_config(o);
    if (pretrain->parsed() || adapt->parsed()) config.save_checkpoints = true;
    Workspace ws(config, o.out_dir, [&](const std::string& m) {
      if (!o.quiet) std::cerr << m << '\n';
    });
    Runner runner(ws);
    const std::string command = app.get_subcommands().front()->get_name();
    int failed = 0;

    if (embed->parsed()) {
      stage = "embed";
      for (const auto& [src, tgt] : config.pairs)
        for (const auto& ratio : config.ratios)
          for (auto seed : config.seeds) {
            auto data = ws.prepare(src, tgt, ratio, seed);
            ws.embeddings(*data);
            if (!o.quiet) std::cout << ws.embedding_path(*data).generic_string() << '\n';
          }
    } else if (baseline->parsed()) {
      stage = "baseline";
      const auto plans = select(config, true);
      if (plans.empty()) throw std::invalid_argument("no baseline methods selected");
      failed = report_results(runner.run_all(plans), o);
    } else if (pretrain->parsed()) {
      stage = "pretrain";
      for (const auto& plan : select(config, false)) {
        auto model = runner.pretrain(plan);
        if (!o.quiet)
          std::cout << plan.relative_dir().generic_string() << " train accuracy " << model->train_accuracy << '\n';
      }
    } else if (adapt->parsed()) {
      stage = "adapt";
      for (const auto& plan : select(config, false)) {
        auto source = runner.load_source(plan);
        const auto result = runner.adapt(plan, *source);
        if (!o.quiet && !result.curve.empty())
          std::cout << plan.relative_dir().generic_string() << " final d_loss " << result.curve.back().d_loss
                    << " m_loss " << result.curve.back().m_loss << '\n';
      }
    } else if (eval->parsed()) {
      stage = "eval";
      std::vector<RunResult> results;
      for (const auto& plan : expand_grid(config)) {
        if (is_baseline(plan.method)) {
          results.push_back(runner.run_baseline(plan));
          continue;
        }
        auto source = runner.load_source(plan);
        const bool has_target = std::filesystem::exists(runner.run_dir(plan) / "target.ckpt");
        std::optional<nn::LayerStack> target;
        if (has_target) target = runner.load_target(plan);
        results.push_back(runner.evaluate(plan, *source, target ? &*target : nullptr));
      }
      failed = report_results(results, o);
    } else if (grid->parsed()) {
      stage = "grid";
      failed = report_results(runner.run_all(expand_grid(config)), o);
    }
    finish(command, o, config);
    if (failed) {
      std::cerr << "error: [" << stage << "] " << failed << " run(s) failed\n";
      return 3;
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [" << stage << "] " << e.what() << '\n';
    return 1;
  }
}

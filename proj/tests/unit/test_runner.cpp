#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dcitl/common/error.hpp"
#include "dcitl/experiments/report.hpp"
#include "dcitl/experiments/runner.hpp"
#include "fixtures.hpp"
#include "test_helpers.hpp"

using namespace dcitl;
using namespace dcitl::experiments;

namespace {

std::filesystem::path data_root() {
  static const std::filesystem::path dir = [] {
    auto d = testing::scratch_dir("runner_data");
    testing::write_synthetic_domains(d, {"books", "dvd", "kitchen"});
    return d;
  }();
  return dir;
}

ExperimentPlan plan_for(const RunConfig& c, Method m) {
  for (const auto& p : expand_grid(c))
    if (p.method == m) return p;
  throw std::logic_error("method not in grid");
}

void check_same(const MetricsReport& a, const MetricsReport& b) {
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion == b.confusion);
  CHECK(a.f1_positive() == b.f1_positive());
  CHECK(a.f1_negative() == b.f1_negative());
}

std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = testing::slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("run config json round trip and validation") {
  RunConfig c = testing::small_run_config("somewhere");
  c.methods = {Method::adda, Method::dba};
  c.seeds = {3, 4};
  const auto dir = testing::scratch_dir("config");
  save_run_config(c, dir / "run.json");
  const RunConfig back = load_run_config(dir / "run.json");
  CHECK(nlohmann::json(back) == nlohmann::json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(back).size() == 16);

  RunConfig other = c;
  other.seeds = {3};
  CHECK(config_hash(other) != config_hash(c));

  nlohmann::json j = c;
  j["mystery"] = 1;
  CHECK_THROWS(j.get<RunConfig>());
  j = c;
  j.erase("version");
  CHECK_THROWS(j.get<RunConfig>());
  j = c;
  j["version"] = 99;
  CHECK_THROWS(j.get<RunConfig>());
}

TEST_CASE("expand_grid nesting and per-method weighting") {
  RunConfig c = testing::small_run_config("x");
  c.methods = {Method::adda, Method::dba, Method::baseline_lr};
  c.pairs = {{"books", "dvd"}, {"dvd", "books"}};
  c.ratios = {RatioSpec{1, 10}, RatioSpec{5, 10}};
  c.seeds = {0, 1};
  const auto plans = expand_grid(c);
  REQUIRE(plans.size() == 3 * 2 * 2 * 2);
  CHECK(plans[0].ratio.str() == "1:10");
  CHECK(plans[0].source == "books");
  CHECK(plans[0].seed == 0);
  CHECK(plans[0].method == Method::adda);
  CHECK(plans[1].method == Method::dba);
  CHECK(plans[3].seed == 1);
  CHECK(plans[6].source == "dvd");
  CHECK(plans[12].ratio.str() == "5:10");
  for (const auto& p : plans) {
    CHECK(p.adaptation.seed == p.seed);
    if (p.method == Method::dba)
      CHECK(p.weighting.mode == dba::WeightingMode::distance);
    else
      CHECK(p.weighting.mode == dba::WeightingMode::uniform);
  }
  CHECK(plans[1].relative_dir().generic_string() == "runs/dba/books-dvd/1x10/seed0");
}

TEST_CASE("workspace prepares deterministic pair data") {
  const auto out = testing::scratch_dir("ws");
  Workspace ws(testing::small_run_config(data_root()), out);
  auto a = ws.prepare("books", "dvd", RatioSpec{5, 10}, 0);
  auto b = ws.prepare("books", "dvd", RatioSpec{5, 10}, 0);
  CHECK(a.get() == b.get());
  // 200 / 200 per domain: 40 per class held out, 160 negatives, 80 positives.
  CHECK(a->source_test.size() == 80);
  CHECK(a->source_train.size() == 240);
  CHECK(a->target_test.size() == 80);
  CHECK(a->target_train.size() == 320);
  for (const auto& d : a->target_train.documents()) CHECK_FALSE(d.label.has_value());
  CHECK(std::count(a->source_train_y.begin(), a->source_train_y.end(), text::kPositive) == 80);

  // Vocabulary never sees target text: domain-specific target tokens are unknown.
  CHECK_FALSE(a->vocab.contains("dvdpos0"));
  CHECK(a->vocab.contains("bookspos0"));

  Workspace fresh(testing::small_run_config(data_root()), testing::scratch_dir("ws2"));
  auto c = fresh.prepare("books", "dvd", RatioSpec{5, 10}, 0);
  CHECK(c->source_split.train == a->source_split.train);
  CHECK(c->key == a->key);
  auto d = fresh.prepare("books", "dvd", RatioSpec{5, 10}, 1);
  CHECK(d->source_split.train != a->source_split.train);

  auto e1 = ws.embeddings(*a);
  CHECK(std::filesystem::exists(ws.embedding_path(*a)));
  Workspace reuse(testing::small_run_config(data_root()), out);
  auto e2 = reuse.embeddings(*reuse.prepare("books", "dvd", RatioSpec{5, 10}, 0));
  CHECK(e1->dim() == 8);
  CHECK(*e1 == *e2);

  CHECK_THROWS_AS(ws.prepare("books", "nosuch", RatioSpec{5, 10}, 0), StageError);
}

TEST_CASE("run_experiment stage semantics") {
  const RunConfig cfg = testing::small_run_config(data_root());

  SUBCASE("baselines leave Adapted absent") {
    Workspace ws(cfg, testing::scratch_dir("run_base"));
    Runner runner(ws);
    for (Method m : {Method::baseline_lr, Method::baseline_nb, Method::baseline_rf}) {
      const RunResult r = runner.run(plan_for(cfg, m));
      REQUIRE(r.in);
      REQUIRE(r.out);
      CHECK_FALSE(r.adapted);
      CHECK(r.in->total == 80);
      CHECK(std::filesystem::exists(runner.run_dir(r.plan) / "metrics.json"));
    }
  }

  SUBCASE("zero adaptation epochs leave Adapted equal to Out") {
    RunConfig c = cfg;
    c.adaptation.adapt_epochs = 0;
    Workspace ws(c, testing::scratch_dir("run_zero"));
    for (Method m : {Method::adda, Method::lr_dis}) {
      const RunResult r = run_experiment(plan_for(c, m), ws);
      REQUIRE(r.adapted);
      check_same(*r.adapted, *r.out);
    }
  }

  SUBCASE("dba in uniform mode reproduces adda exactly") {
    RunConfig c = cfg;
    c.dba.mode = dba::WeightingMode::uniform;
    Workspace ws(c, testing::scratch_dir("run_uniform"));
    Runner runner(ws);
    const RunResult a = runner.run(plan_for(c, Method::adda));
    const RunResult d = runner.run(plan_for(c, Method::dba));
    check_same(*a.in, *d.in);
    check_same(*a.out, *d.out);
    check_same(*a.adapted, *d.adapted);
    CHECK(testing::slurp(runner.run_dir(a.plan) / "adapt_curve.csv") ==
          testing::slurp(runner.run_dir(d.plan) / "adapt_curve.csv"));
  }

  SUBCASE("adapt and evaluate stages reload checkpoints") {
    Workspace ws(cfg, testing::scratch_dir("run_stages"));
    Runner runner(ws);
    const ExperimentPlan plan = plan_for(cfg, Method::dba);
    const RunResult full = runner.run(plan);
    auto source = runner.load_source(plan);
    const nn::LayerStack target = runner.load_target(plan);
    const RunResult again = runner.evaluate(plan, *source, &target);
    check_same(*full.in, *again.in);
    check_same(*full.out, *again.out);
    check_same(*full.adapted, *again.adapted);
    CHECK(std::filesystem::exists(runner.run_dir(plan) / "source.ckpt"));
    CHECK(std::filesystem::exists(runner.run_dir(plan) / "pretrain_curve.csv"));

    Workspace empty(cfg, testing::scratch_dir("run_stages_empty"));
    Runner cold(empty);
    try {
      cold.load_source(plan);
      FAIL("expected a load error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "load");
    }
  }

  SUBCASE("failures are stage-tagged and the grid continues") {
    RunConfig c = cfg;
    c.pairs = {{"books", "missing"}, {"books", "dvd"}};
    c.methods = {Method::baseline_nb};
    Workspace ws(c, testing::scratch_dir("run_fail"));
    const auto results = run_grid(ws);
    REQUIRE(results.size() == 2);
    CHECK_FALSE(results[0].ok());
    CHECK(results[0].error.find("[load]") == 0);
    CHECK(results[1].ok());

    RunConfig impossible = cfg;
    impossible.ratios = {RatioSpec{10, 1}};
    impossible.methods = {Method::baseline_lr};
    Workspace ws2(impossible, testing::scratch_dir("run_fail2"));
    const auto r2 = run_grid(ws2);
    REQUIRE(r2.size() == 1);
    CHECK(r2[0].error.find("[split]") == 0);
  }
}

TEST_CASE("degenerate grid equals run_experiment and reruns are bit-exact") {
  RunConfig c = testing::small_run_config(data_root());
  c.methods = {Method::dba};
  Workspace ws_grid(c, testing::scratch_dir("grid_a"));
  const auto results = run_grid(ws_grid);
  REQUIRE(results.size() == 1);
  Workspace ws_single(c, testing::scratch_dir("grid_b"));
  const RunResult single = run_experiment(expand_grid(c)[0], ws_single);
  check_same(*results[0].adapted, *single.adapted);

  const auto rows = to_rows(results);
  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 1);
  for (std::size_t k = 0; k < 9; ++k) CHECK(summary[0].metrics[k] == rows[0].metrics[k]);

  c.methods = {Method::lr_dis, Method::dba, Method::baseline_rf};
  c.seeds = {0, 1};
  const auto dir1 = testing::scratch_dir("grid_rerun1");
  const auto dir2 = testing::scratch_dir("grid_rerun2");
  for (const auto& dir : {dir1, dir2}) {
    Workspace ws(c, dir);
    const auto rs = to_rows(run_grid(ws));
    emit_report(dir, rs, ReportFormat::csv);
    emit_report(dir, rs, ReportFormat::markdown);
    emit_report(dir, rs, ReportFormat::plotdata);
    write_manifest(dir, {"grid", config_hash(c), c.seeds});
  }
  const auto t1 = tree_contents(dir1);
  const auto t2 = tree_contents(dir2);
  CHECK(t1.size() > 10);
  CHECK(t1 == t2);
}

TEST_CASE("report formats") {
  ResultRow a{"adda", "books", "dvd", "1:10", 0, "ok", {}};
  ResultRow b{"adda", "kitchen", "dvd", "1:10", 1, "ok", {}};
  ResultRow base{"baseline-lr", "books", "dvd", "1:10", 0, "ok", {}};
  ResultRow failed{"adda", "books", "dvd", "1:10", 2, "[adapt] diverged, \"nan\"", {}};
  for (std::size_t k = 0; k < 9; ++k) {
    a.metrics[k] = 0.1 * static_cast<double>(k) + 1.0 / 3.0;
    b.metrics[k] = 0.2;
    if (k < 6) base.metrics[k] = 0.5;
  }
  failed.metrics[0] = 100.0;
  const std::vector<ResultRow> rows{a, b, base, failed};
  const auto dir = testing::scratch_dir("report");

  SUBCASE("csv round trip keeps every bit") {
    const auto path = emit_report(dir, rows, ReportFormat::csv);
    const auto back = read_results_csv(path);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].method == rows[i].method);
      CHECK(back[i].status == rows[i].status);
      CHECK(back[i].seed == rows[i].seed);
      CHECK(back[i].metrics == rows[i].metrics);
    }
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "method,source,target,ratio,seed,status,in_acc,in_f1p,in_f1n,out_acc,out_f1p,out_f1n,"
          "adapted_acc,adapted_f1p,adapted_f1n");
  }

  SUBCASE("single run gives one row with nine metric columns") {
    const std::vector<ResultRow> one{a};
    const auto path = emit_report(dir, one, ReportFormat::csv);
    std::ifstream in(path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 2);
    CHECK(std::count(lines[1].begin(), lines[1].end(), ',') == 5 + 9);
  }

  SUBCASE("summary averages successful runs and markdown layout") {
    const auto summary = summarize(rows);
    REQUIRE(summary.size() == 2);
    CHECK(summary[0].method == "adda");
    CHECK(summary[0].runs == 2);
    CHECK(*summary[0].metrics[0] == doctest::Approx((1.0 / 3.0 + 0.2) / 2).epsilon(1e-15));
    CHECK_FALSE(summary[1].metrics[6]);
    const std::string md = format_markdown(summary);
    CHECK(md.rfind("Method | Ratio | In | f1(p) | f1(n) | Out | f1(p) | f1(n) | Adapted | f1(p) | f1(n)\n", 0) == 0);
    CHECK(md.find("baseline-lr | 1:10 | 0.5000 | 0.5000 | 0.5000 | 0.5000 | 0.5000 | 0.5000 | - | - | -") !=
          std::string::npos);
  }

  SUBCASE("plotdata is the full ratio x class x method product") {
    std::vector<ResultRow> more = rows;
    ResultRow c = a;
    c.ratio = "5:10";
    more.push_back(c);
    const auto path = emit_report(dir, more, ReportFormat::plotdata);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "ratio_group,class,method,f1");
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n == 2 * 2 * 2);
    // baseline falls back to Out F1.
    CHECK(testing::slurp(path).find("1:10,Pos,baseline-lr,0.5\n") != std::string::npos);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(emit_report(dir, std::vector<ResultRow>{}, ReportFormat::csv), std::invalid_argument);
    CHECK_THROWS(report_format_from_string("pdf"));
    CHECK_THROWS(emit_report("/proc/forbidden", rows, ReportFormat::csv));
  }

  SUBCASE("manifest lists files sorted with hashes") {
    emit_report(dir, rows, ReportFormat::csv);
    emit_report(dir, rows, ReportFormat::markdown);
    std::filesystem::create_directories(dir / "cache");
    std::ofstream(dir / "cache" / "x.bin") << "x";
    write_manifest(dir, {"report", "abc", {0, 1}});
    const auto j = nlohmann::json::parse(testing::slurp(dir / "manifest.json"));
    CHECK(j["config_hash"] == "abc");
    CHECK(j["seeds"] == nlohmann::json::array({0, 1}));
    std::vector<std::string> paths;
    for (const auto& f : j["files"]) paths.push_back(f["path"]);
    CHECK(std::is_sorted(paths.begin(), paths.end()));
    CHECK(std::find(paths.begin(), paths.end(), "results.csv") != paths.end());
    CHECK(std::find(paths.begin(), paths.end(), "cache/x.bin") == paths.end());
    CHECK(j["files"][0]["fnv1a"].get<std::string>().size() == 16);
  }
}

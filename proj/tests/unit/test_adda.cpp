#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dcitl/adda/adda.hpp"
#include "dcitl/adda/models.hpp"
#include "dcitl/common/error.hpp"
#include "dcitl/nn/gradcheck.hpp"
#include "test_helpers.hpp"

using namespace dcitl;
using namespace dcitl::adda;

namespace {

// Logit rows whose softmax puts probability p on the source column.
nn::Tensor logits_for(std::initializer_list<double> probs) {
  nn::Tensor t({probs.size(), 2});
  std::size_t r = 0;
  for (double p : probs) {
    t.at(r, 0) = std::log(p);
    t.at(r, 1) = std::log(1.0 - p);
    ++r;
  }
  return t;
}

// Two Gaussian blobs in `dim` dimensions separated along the first axis.
struct Blobs {
  nn::Tensor x;
  std::vector<int> y;
};

Blobs make_blobs(std::size_t n, std::size_t dim, double gap, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b{nn::Tensor({n, dim}), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    b.y[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < dim; ++j) b.x.at(i, j) = rng.uniform(-1, 1);
    b.x.at(i, 0) += b.y[i] ? gap : -gap;
  }
  return b;
}

double accuracy(const std::vector<int>& a, std::span<const int> b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ok += a[i] == b[i];
  return static_cast<double>(ok) / static_cast<double>(a.size());
}

ExtractorConfig linear_config(std::vector<std::size_t> hidden) {
  ExtractorConfig c;
  c.variant = ExtractorVariant::linear;
  c.hidden = std::move(hidden);
  return c;
}

}  // namespace

TEST_CASE("discriminator and mapping loss values") {
  CHECK(discriminator_logit_loss(logits_for({0.5, 0.5}), 1).loss == doctest::Approx(2 * std::log(2.0)));
  CHECK(discriminator_logit_loss(logits_for({0.8, 0.4}), 1).loss == doctest::Approx(0.7340).epsilon(1e-4));
  CHECK(discriminator_logit_loss(logits_for({0.8, 0.4}), 1).loss ==
        doctest::Approx(-std::log(0.8) - std::log(0.6)).epsilon(1e-12));
  nn::Tensor perfect({2, 2});
  perfect.at(0, 0) = 50;
  perfect.at(1, 1) = 50;
  const auto p = discriminator_logit_loss(perfect, 1);
  CHECK(p.loss == doctest::Approx(-2 * std::log(1 - kProbabilityClamp)).epsilon(1e-12));
  CHECK(p.loss < 1e-6);
  CHECK(p.gradient.at(0, 0) == 0.0);

  CHECK(mapping_logit_loss(logits_for({0.5, 0.5, 0.5})).loss == doctest::Approx(std::log(2.0)));
  CHECK(mapping_logit_loss(logits_for({0.25, 0.75})).loss == doctest::Approx(0.8370).epsilon(1e-4));
  CHECK(mapping_logit_loss(logits_for({0.25, 0.75})).loss ==
        doctest::Approx(-(std::log(0.25) + std::log(0.75)) / 2).epsilon(1e-12));
  nn::Tensor fooled({1, 2});
  fooled.at(0, 0) = 60;
  CHECK(mapping_logit_loss(fooled).loss < 1e-6);

  CHECK_THROWS_AS(discriminator_logit_loss(logits_for({0.5}), 1), std::invalid_argument);
  CHECK_THROWS_AS(mapping_logit_loss(nn::Tensor({2, 3})), ShapeError);
  nn::Tensor nan_logits({2, 2});
  nan_logits.at(0, 0) = NAN;
  CHECK_THROWS_AS(mapping_logit_loss(nan_logits), std::domain_error);
}

TEST_CASE("weighted source term reduces to the mean with uniform weights") {
  Rng rng(4);
  const nn::Tensor logits = testing::random_tensor({7, 2}, rng, 2.0);
  const std::vector<double> w(3, 1.0 / 3);
  const auto a = discriminator_logit_loss(logits, 3);
  const auto b = discriminator_logit_loss(logits, 3, w);
  CHECK(a.loss == b.loss);
  CHECK(nn::bit_equal(a.gradient, b.gradient));
}

TEST_CASE("adversarial losses pass finite-difference checks") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t f = 3 + rng.below(4), ns = 1 + rng.below(4), nt = 1 + rng.below(4);
    nn::LayerStack d = make_discriminator(f, 6);
    d.initialize(rng.next());
    // Zero biases put dead-row pre-activations exactly on the relu kink.
    for (nn::Parameter* p : d.parameters()) {
      for (double& v : p->value.data()) v += rng.uniform(-0.2, 0.2);
    }
    const nn::Tensor feats = testing::random_tensor({ns + nt, f}, rng, 1.5);
    std::vector<double> w(ns);
    double total = 0;
    for (double& v : w) total += (v = rng.uniform(0.1, 1.0));
    for (double& v : w) v /= total;
    auto d_loss = [&](const nn::Tensor& out) { return discriminator_logit_loss(out, ns, w); };
    CHECK(nn::gradient_check(d, feats, d_loss) < 1e-4);

    // Mapping loss through M_t and D jointly: gradients into the extractor.
    nn::LayerStack chain;
    chain.emplace<nn::Linear>(5, f);
    chain.initialize(rng.next());
    for (std::size_t i = 0; i < d.size(); ++i) chain.add(d.layer(i).clone());
    const nn::Tensor x = testing::random_tensor({nt, 5}, rng);
    CHECK(nn::gradient_check(chain, x, mapping_logit_loss) < 1e-4);
    CHECK(nn::input_gradient_check(d, feats, mapping_logit_loss) < 1e-4);
  }
}

TEST_CASE("mapping_loss returns the feature gradient and leaves D clean") {
  Rng rng(7);
  nn::LayerStack d = make_discriminator(4);
  d.initialize(1);
  const nn::Tensor f = testing::random_tensor({3, 4}, rng);
  const auto r = mapping_loss(d, f);
  CHECK(r.gradient.shape() == f.shape());
  for (const nn::Parameter* p : d.parameters()) {
    for (double g : p->grad.data()) CHECK(g == 0.0);
  }
  const double l = discriminator_loss(d, f.slice_rows(0, 1), f.slice_rows(1, 2));
  CHECK(std::isfinite(l));
}

TEST_CASE("model builders") {
  ExtractorConfig cnn;
  nn::LayerStack m = make_extractor(cnn, 128);
  CHECK(extractor_output_dim(cnn) == 96);
  CHECK(m.infer(nn::Tensor({2, 140, 128})).shape() == std::vector<std::size_t>{2, 96});
  ExtractorConfig lin = linear_config({256, 64});
  CHECK(make_extractor(lin, 500).infer(nn::Tensor({3, 500})).shape() == std::vector<std::size_t>{3, 64});
  CHECK(make_classifier_head(96).infer(nn::Tensor({1, 96})).shape() == std::vector<std::size_t>{1, 2});
  CHECK(make_discriminator(64).infer(nn::Tensor({5, 64})).shape() == std::vector<std::size_t>{5, 2});
  ExtractorConfig bad = cnn;
  bad.widths = {200};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  nlohmann::json j = lin;
  CHECK(j.get<ExtractorConfig>().hidden == lin.hidden);
}

TEST_CASE("feature sources") {
  auto table = std::make_shared<text::EmbeddingTable>(4, 2);
  table->row(2)[0] = 1.5;
  table->row(3)[1] = -2.0;
  SequenceSource seq({{2, 3}, {3}}, table, 3);
  const std::vector<std::size_t> idx{1, 0};
  const nn::Tensor x = seq.gather(idx);
  CHECK(x.shape() == std::vector<std::size_t>{2, 3, 2});
  CHECK(x.row(0)[1] == -2.0);
  CHECK(x.row(1)[0] == 1.5);
  CHECK(x.row(1)[3] == -2.0);
  CHECK(x.row(1)[4] == 0.0);
  const std::vector<std::size_t> oob{2};
  CHECK_THROWS_AS(seq.gather(oob), std::out_of_range);

  text::SparseVector a{5, {1, 4}, {0.5, 2.0}};
  SparseSource sparse({a, text::SparseVector{5, {}, {}}});
  const std::vector<std::size_t> first{0};
  CHECK(sparse.gather(first).data()[4] == 2.0);
  CHECK(sparse.sample_shape() == std::vector<std::size_t>{5});
}

TEST_CASE("pretraining separates a synthetic corpus") {
  const Blobs train = make_blobs(400, 6, 1.0, 11);
  DenseSource src(train.x);
  AdaptationConfig cfg;
  cfg.pretrain_epochs = 20;
  cfg.seed = 3;
  nn::LayerStack m = make_extractor(linear_config({8, 4}), 6);
  m.initialize(1);
  nn::LayerStack c = make_classifier_head(4);
  c.initialize(2);
  PretrainResult r = pretrain_source(m, c, src, train.y, cfg);
  CHECK(r.train_accuracy > 0.95);
  CHECK(r.curve.size() == 20);
  CHECK(r.curve.back().loss < r.curve.front().loss);

  PretrainResult again = pretrain_source(m, c, src, train.y, cfg);
  CHECK(nn::bit_equal(again.head.layer(0).parameters()[0]->value, r.head.layer(0).parameters()[0]->value));
}

TEST_CASE("one-batch overfit with the cnn extractor") {
  Rng rng(8);
  ExtractorConfig cfg;
  cfg.max_len = 12;
  cfg.filters = 4;
  const nn::Tensor x = testing::random_tensor({10, 12, 6}, rng);
  std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  DenseSource src(x);
  AdaptationConfig ac;
  ac.pretrain_epochs = 200;
  ac.pretrain_optimizer = {nn::OptimizerKind::adam, 1e-2};
  nn::LayerStack m = make_extractor(cfg, 6);
  m.initialize(3);
  nn::LayerStack c = make_classifier_head(extractor_output_dim(cfg));
  c.initialize(4);
  PretrainResult r = pretrain_source(m, c, src, y, ac);
  CHECK(r.curve.back().loss < 0.01);
  CHECK(r.train_accuracy == 1.0);
}

TEST_CASE("pretraining rejects bad input and reports divergence") {
  const Blobs b = make_blobs(20, 3, 1.0, 1);
  DenseSource src(b.x);
  AdaptationConfig cfg;
  nn::LayerStack m = make_extractor(linear_config({2}), 3);
  nn::LayerStack c = make_classifier_head(2);
  m.initialize(1);
  c.initialize(1);
  const std::vector<int> short_labels(5, 0);
  CHECK_THROWS_AS(pretrain_source(m, c, src, short_labels, cfg), StageError);
  cfg.pretrain_optimizer = {nn::OptimizerKind::sgd, 1e200};
  try {
    pretrain_source(m, c, src, b.y, cfg);
    FAIL("expected divergence");
  } catch (const StageError& e) {
    CHECK(e.stage() == "pretrain");
  }
}

TEST_CASE("adaptation keeps the source model frozen and is reproducible") {
  const Blobs s = make_blobs(120, 5, 1.0, 21);
  const Blobs t = make_blobs(80, 5, 1.0, 22);
  DenseSource src(s.x), tgt(t.x);
  AdaptationConfig cfg;
  cfg.pretrain_epochs = 5;
  cfg.adapt_epochs = 3;
  cfg.seed = 17;
  nn::LayerStack m0 = make_extractor(linear_config({6, 4}), 5);
  m0.initialize(5);
  nn::LayerStack c0 = make_classifier_head(4);
  c0.initialize(6);
  PretrainResult pre = pretrain_source(m0, c0, src, s.y, cfg);
  const nn::LayerStack ms_before = pre.extractor;
  const nn::LayerStack c_before = pre.head;
  nn::LayerStack d = make_discriminator(4);
  d.initialize(7);

  SUBCASE("frozen source model, labels-free target, deterministic") {
    AdaptResult a = adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, tgt, cfg);
    auto before = std::as_const(ms_before).parameters();
    auto after = std::as_const(pre.extractor).parameters();
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(nn::bit_equal(before[i]->value, after[i]->value));
    auto hb = std::as_const(c_before).parameters();
    auto ha = std::as_const(pre.head).parameters();
    for (std::size_t i = 0; i < hb.size(); ++i) CHECK(nn::bit_equal(hb[i]->value, ha[i]->value));
    CHECK(a.curve.size() == 3);
    AdaptResult b = adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, tgt, cfg);
    auto pa = std::as_const(a.target_extractor).parameters();
    auto pb = std::as_const(b.target_extractor).parameters();
    bool moved = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(nn::bit_equal(pa[i]->value, pb[i]->value));
      moved |= !nn::bit_equal(pa[i]->value, after[i]->value);
    }
    CHECK(moved);
  }

  SUBCASE("zero epochs leave M_t equal to M_s") {
    cfg.adapt_epochs = 0;
    AdaptResult a = adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, tgt, cfg);
    CHECK(predict_target(a.target_extractor, pre.head, tgt) == predict_target(pre.extractor, pre.head, tgt));
    CHECK(a.curve.empty());
  }

  SUBCASE("uniform weighting is bit-identical to plain adaptation; distance mode is not") {
    AdaptResult plain = adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, tgt, cfg);
    dba::WeightingConfig uniform;
    uniform.mode = dba::WeightingMode::uniform;
    AdaptResult u = adapt_with_dba(pre.extractor, pre.extractor, d, src, {}, tgt, cfg, uniform);
    dba::WeightingConfig dist;
    dist.mode = dba::WeightingMode::distance;
    cfg.trace_weights = true;
    AdaptResult w = adapt_with_dba(pre.extractor, pre.extractor, d, src, {}, tgt, cfg, dist);
    auto pp = std::as_const(plain.target_extractor).parameters();
    auto pu = std::as_const(u.target_extractor).parameters();
    auto pw = std::as_const(w.target_extractor).parameters();
    bool differs = false;
    for (std::size_t i = 0; i < pp.size(); ++i) {
      CHECK(nn::bit_equal(pp[i]->value, pu[i]->value));
      differs |= !nn::bit_equal(pp[i]->value, pw[i]->value);
    }
    CHECK(differs);
    CHECK(w.weight_trace.rows() == 3 * 80);
    for (std::size_t e = 0; e < plain.curve.size(); ++e) CHECK(plain.curve[e].d_loss == u.curve[e].d_loss);
  }

  SUBCASE("class-ratio mode needs source labels") {
    dba::WeightingConfig cr;
    cr.mode = dba::WeightingMode::class_ratio;
    CHECK_THROWS_AS(adapt_with_dba(pre.extractor, pre.extractor, d, src, {}, tgt, cfg, cr), StageError);
    AdaptResult r = adapt_with_dba(pre.extractor, pre.extractor, d, src, s.y, tgt, cfg, cr);
    CHECK(r.curve.size() == 3);
  }

  SUBCASE("probe accuracy and curve csv") {
    Probe probe{&pre.head, &tgt, t.y};
    cfg.log_every = 2;
    AdaptResult a = adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, tgt, cfg, probe);
    CHECK(!a.curve[0].probe_accuracy);
    CHECK(a.curve[1].probe_accuracy);
    CHECK(a.curve[2].probe_accuracy);
    const auto path = testing::scratch_dir("adapt_curve") / "curve.csv";
    write_adapt_curve_csv(path, a.curve);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,d_loss,m_loss,probe_accuracy");
    std::getline(in, line);
    CHECK(line.back() == ',');
  }

  SUBCASE("divergence is reported with the stage tag") {
    cfg.target_optimizer = {nn::OptimizerKind::sgd, 1e300};
    cfg.discriminator_optimizer = {nn::OptimizerKind::sgd, 1e300};
    try {
      adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, tgt, cfg);
      FAIL("expected divergence");
    } catch (const StageError& e) {
      CHECK(e.stage() == "adapt");
    }
  }
}

TEST_CASE("identical source and target leave accuracy essentially unchanged") {
  const Blobs s = make_blobs(300, 5, 1.0, 31);
  DenseSource src(s.x);
  AdaptationConfig cfg;
  cfg.pretrain_epochs = 10;
  cfg.adapt_epochs = 5;
  nn::LayerStack m = make_extractor(linear_config({6, 4}), 5);
  m.initialize(1);
  nn::LayerStack c = make_classifier_head(4);
  c.initialize(2);
  PretrainResult pre = pretrain_source(m, c, src, s.y, cfg);
  nn::LayerStack d = make_discriminator(4);
  d.initialize(3);
  AdaptResult a = adversarial_adapt(pre.extractor, pre.extractor, d, src, {}, src, cfg);
  const double out = accuracy(predict_target(pre.extractor, pre.head, src), s.y);
  const double adapted = accuracy(predict_target(a.target_extractor, pre.head, src), s.y);
  CHECK(std::abs(adapted - out) <= 0.03);
}

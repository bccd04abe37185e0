// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "extralab/eval.hpp"
#include "extralab/taskgen.hpp"
#include "extralab/train.hpp"

using namespace extralab;

namespace {

// Textbook bias-corrected Adam in long double, written independently of the
// library implementation.
struct AdamOracle {
  long double lr, b1, b2, eps;
  std::vector<long double> m, v;
  int t = 0;
  void step(std::vector<long double>& p, const std::vector<long double>& g) {
    if (m.empty()) m.assign(p.size(), 0), v.assign(p.size(), 0);
    ++t;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const long double mhat = m[i] / (1 - std::pow(b1, static_cast<long double>(t)));
      const long double vhat = v[i] / (1 - std::pow(b2, static_cast<long double>(t)));
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

struct SmallData {
  AdditionSplits splits;
  TrialData data;
  Vocabulary vocab = Vocabulary::build({TaskKind::decimal_addition});
  SmallData() {
    SplitSpec spec = small_digit_spec(11);
    spec.n_train = 500;
    spec.n_val = 100;
    spec.n_test = 200;
    splits = gen_addition(spec, vocab);
    data = {&splits.train, &splits.val, &splits.test, spec.train_range};
  }
};

ExperimentConfig smoke_config() {
  auto cfg = ExperimentConfig::defaults(Architecture::transformer);
  auto& t = cfg.model.transformer;
  t.n_layers_enc = t.n_layers_dec = 1;
  t.d_model = 32;
  t.d_ff = 64;
  t.n_heads = 4;
  cfg.train.epochs = 5;
  cfg.train.batch_size = 64;
  cfg.train.seed = 3;
  cfg.adam.lr = 1e-3;
  cfg.n_trials = 2;
  return cfg;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("extralab_train_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("Adam with zero gradients leaves parameters unchanged") {
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g(3, 0.0);
  AdamState<double> st;
  for (int i = 0; i < 5; ++i) adam_step<double>(p, g, st, AdamConfig{});
  CHECK(p == std::vector<double>{1.0, -2.0, 0.5});
  CHECK(st.t == 5);
}

TEST_CASE("one Adam step moves a parameter by lr in the gradient's sign") {
  std::vector<double> p = {1.0, 1.0};
  const std::vector<double> g = {0.3, -7.0};
  AdamState<double> st;
  adam_step<double>(p, g, st, AdamConfig{});
  CHECK(p[0] == doctest::Approx(0.999).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(1.001).epsilon(1e-7));
}

TEST_CASE("ten Adam steps match the independent oracle within 1e-10") {
  for (const auto& cfg : {AdamConfig::for_architecture(Architecture::seq2seq),
                          AdamConfig::for_architecture(Architecture::transformer)}) {
    Rng rng(42);
    std::vector<double> p(8);
    for (auto& x : p) x = rng.uniform(-1, 1);
    std::vector<long double> q(p.begin(), p.end());
    AdamState<double> st;
    AdamOracle oracle{cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon, {}, {}, 0};
    for (int step = 0; step < 10; ++step) {
      std::vector<double> g(p.size());
      for (auto& x : g) x = rng.uniform(-2, 2);
      adam_step<double>(p, g, st, cfg);
      oracle.step(q, std::vector<long double>(g.begin(), g.end()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(p[i] - static_cast<double>(q[i])) < 1e-10);
  }
}

TEST_CASE("architecture optimizer defaults") {
  const auto t = AdamConfig::for_architecture(Architecture::transformer);
  CHECK(t.lr == 1e-4);
  CHECK(t.beta2 == 0.98);
  CHECK(t.epsilon == 1e-9);
  for (auto arch : {Architecture::mlp, Architecture::seq2seq}) {
    const auto c = AdamConfig::for_architecture(arch);
    CHECK(c.lr == 1e-3);
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.999);
    CHECK(c.epsilon == 1e-8);
  }
  const auto d = ExperimentConfig::defaults(Architecture::mlp);
  CHECK(d.train.batch_size == 256);
  CHECK(d.train.epochs == 100);
  AdamConfig bad;
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("Adam refuses non-finite gradients without touching parameters") {
  std::vector<NamedTensor> params = {{"w", Tensor::full({3}, 1.0f, true)}};
  Adam adam(params, AdamConfig{});
  auto g = params[0].tensor.grad();
  g[1] = std::numeric_limits<float>::quiet_NaN();
  try {
    adam.step();
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("w") != std::string::npos);
  }
  for (auto v : params[0].tensor.values()) CHECK(v == 1.0f);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> xs = {1, 2, 3};
  const auto r = mean_sd(xs);
  CHECK(r.mean == 2.0);
  CHECK(r.sd == 1.0);
  CHECK(r.n == 3);
  const std::vector<double> one = {4.5};
  CHECK(mean_sd(one).sd == 0.0);
}

TEST_CASE("smoke training: artifacts, reload reproduces validation EM, determinism") {
  SmallData d;
  const auto cfg = smoke_config();
  const auto dir_a = scratch("a");
  const auto dir_b = scratch("b");
  const auto a = run_trials(cfg, d.vocab, d.data, dir_a);
  const auto b = run_trials(cfg, d.vocab, d.data, dir_b);

  REQUIRE(a.trials.size() == 2);
  CHECK(a.n_failed == 0);
  for (int i = 0; i < 2; ++i) {
    const auto& t = a.trials[static_cast<std::size_t>(i)];
    CHECK(t.completed);
    CHECK(t.seed == cfg.train.seed + static_cast<std::uint64_t>(i));
    CHECK(t.epochs.size() == 5);
    CHECK(t.epochs.front().train_loss > t.epochs.back().train_loss);

    // metrics.csv: header plus one row per epoch.
    std::ifstream metrics(t.best_checkpoint.parent_path() / "metrics.csv");
    int lines = 0;
    for (std::string line; std::getline(metrics, line);) ++lines;
    CHECK(lines == 6);
    for (const char* f : {"scatter.csv", "pred_vs_truth.csv", "answer_hist.csv", "top_errors.csv", "report.json"}) {
      CHECK(std::filesystem::exists(t.best_checkpoint.parent_path() / "eval" / f));
    }

    // The saved best checkpoint reproduces the recorded validation EM.
    auto reloaded = Model::load(t.best_checkpoint);
    CHECK(evaluate_em(*reloaded, d.splits.val.examples) == t.best_val_em);
    CHECK(evaluate_em(*reloaded, d.splits.test.examples) == t.test_em);

    // Identical seeds give identical trajectories.
    const auto& u = b.trials[static_cast<std::size_t>(i)];
    for (std::size_t e = 0; e < t.epochs.size(); ++e) {
      CHECK(t.epochs[e].train_loss == u.epochs[e].train_loss);
      CHECK(t.epochs[e].val_em == u.epochs[e].val_em);
    }
    CHECK(t.test_em == u.test_em);
  }
  CHECK(a.val_em.mean == b.val_em.mean);
  CHECK(a.test_em.mean == b.test_em.mean);

  const auto summary = RunSummary::from_json(nlohmann::json::parse(std::ifstream(dir_a / "summary.json")));
  CHECK(summary.val_em.mean == a.val_em.mean);
  CHECK(summary.param_count == a.param_count);
  const auto config = nlohmann::json::parse(std::ifstream(dir_a / "config.json"));
  CHECK(config.at("vocabulary_hash") == d.vocab.hash());
  CHECK(ExperimentConfig::from_json(config).to_json() == cfg.to_json());

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("parallel trials reproduce sequential ones") {
  SmallData d;
  auto cfg = smoke_config();
  cfg.train.epochs = 2;
  const auto dir_s = scratch("seq");
  const auto dir_p = scratch("par");
  const auto s = run_trials(cfg, d.vocab, d.data, dir_s);
  cfg.parallel = 2;
  const auto p = run_trials(cfg, d.vocab, d.data, dir_p);
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    CHECK(s.trials[i].best_val_em == p.trials[i].best_val_em);
    CHECK(s.trials[i].epochs.back().train_loss == p.trials[i].epochs.back().train_loss);
  }
  std::filesystem::remove_all(dir_s);
  std::filesystem::remove_all(dir_p);
}

TEST_CASE("a non-finite loss ends the trial with a failure record") {
  SmallData d;
  auto cfg = smoke_config();
  auto model = make_model(cfg.model, d.vocab, 1);
  model->parameters().front().tensor.values()[0] = std::numeric_limits<float>::infinity();
  const auto dir = scratch("nan");
  const auto rec = train_trial(*model, d.data, cfg.train, cfg.adam, dir);
  CHECK(!rec.completed);
  CHECK(rec.failed_epoch == 1);
  CHECK(rec.failed_step >= 1);
  CHECK(!rec.error.empty());
  const auto j = nlohmann::json::parse(std::ifstream(dir / "record.json"));
  CHECK(j.at("completed") == false);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ten trials give ten records with consecutive seeds") {
  SmallData d;
  auto cfg = ExperimentConfig::defaults(Architecture::mlp);
  cfg.model.mlp.hidden_units = 16;
  cfg.model.mlp.n_fc_layers = 1;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 128;
  cfg.train.seed = 40;
  cfg.n_trials = 10;
  const auto dir = scratch("ten");
  const auto s = run_trials(cfg, d.vocab, d.data, dir);
  REQUIRE(s.trials.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(s.trials[i].seed == 40 + i);
    char name[16];
    std::snprintf(name, sizeof name, "trial_%02zu", i);
    CHECK(std::filesystem::exists(dir / name / "best.ckpt"));
  }
  std::filesystem::remove_all(dir);
}

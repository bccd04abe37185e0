// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "extralab/ops.hpp"
#include "extralab/rng.hpp"

namespace extralab {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string trial_dir_name(int index, int n_trials) {
  const int width = std::max<int>(2, static_cast<int>(std::to_string(std::max(0, n_trials - 1)).size()));
  std::string digits = std::to_string(index);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return "trial_" + digits;
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

void AdamConfig::validate() const {
  if (!(lr > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("adam: lr and epsilon must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam: beta1 and beta2 must lie in [0, 1)");
  }
}

nlohmann::json AdamConfig::to_json() const {
  return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"epsilon", epsilon}};
}

AdamConfig AdamConfig::from_json(const nlohmann::json& j) {
  AdamConfig c;
  c.lr = get_or(j, "lr", c.lr);
  c.beta1 = get_or(j, "beta1", c.beta1);
  c.beta2 = get_or(j, "beta2", c.beta2);
  c.epsilon = get_or(j, "epsilon", c.epsilon);
  c.validate();
  return c;
}

AdamConfig AdamConfig::for_architecture(Architecture arch) {
  if (arch == Architecture::transformer) return {1e-4, 0.9, 0.98, 1e-9};
  return {1e-3, 0.9, 0.999, 1e-8};
}

Adam::Adam(std::vector<NamedTensor>& params, AdamConfig cfg) : params_(&params), cfg_(cfg), states_(params.size()) {
  cfg_.validate();
}

void Adam::step() {
  for (auto& p : *params_) {
    if (!p.tensor.has_grad()) continue;
    for (float g : std::as_const(p.tensor).grad()) {
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  for (std::size_t i = 0; i < params_->size(); ++i) {
    auto& t = (*params_)[i].tensor;
    // Parameters untouched by this batch still decay their moments, exactly
    // as a zero gradient would.
    std::span<const float> grad = t.grad();
    adam_step<float>(t.values(), grad, states_[i], cfg_);
  }
  ++steps_;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (epochs <= 0) throw std::invalid_argument("train: epochs must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size}, {"epochs", epochs}, {"seed", seed}, {"shuffle", shuffle},
          {"train_limit", train_limit}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.epochs = get_or(j, "epochs", c.epochs);
  c.seed = get_or(j, "seed", c.seed);
  c.shuffle = get_or(j, "shuffle", c.shuffle);
  c.train_limit = get_or(j, "train_limit", c.train_limit);
  c.validate();
  return c;
}

nlohmann::json TrialRecord::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["completed"] = completed;
  j["best_epoch"] = best_epoch;
  j["best_val_em"] = best_val_em;
  j["best_checkpoint"] = best_checkpoint.string();
  j["test_em"] = test_em;
  j["wall_seconds"] = wall_seconds;
  if (!error.empty()) {
    j["error"] = error;
    j["failed_epoch"] = failed_epoch;
    j["failed_step"] = failed_step;
  }
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_em", e.val_em}, {"seconds", e.seconds}});
  }
  return j;
}

TrialRecord TrialRecord::from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.completed = j.at("completed").get<bool>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_val_em = j.at("best_val_em").get<double>();
  r.best_checkpoint = j.at("best_checkpoint").get<std::string>();
  r.test_em = j.at("test_em").get<double>();
  r.wall_seconds = get_or(j, "wall_seconds", 0.0);
  r.error = get_or<std::string>(j, "error", "");
  r.failed_epoch = get_or(j, "failed_epoch", 0);
  r.failed_step = get_or<std::int64_t>(j, "failed_step", 0);
  for (const auto& e : j.at("epochs")) {
    r.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_em").get<double>(),
                        get_or(e, "seconds", 0.0)});
  }
  return r;
}

TrialRecord train_trial(Model& model, const TrialData& data, const TrainConfig& train_cfg, const AdamConfig& adam_cfg,
                        const std::filesystem::path& out_dir, const EvalOptions& eval_options,
                        const EpochCallback& on_epoch) {
  train_cfg.validate();
  adam_cfg.validate();
  if (!data.train || !data.val || !data.test) throw std::invalid_argument("train_trial: train/val/test datasets required");
  if (data.train->examples.empty()) throw std::invalid_argument("train_trial: empty training split");
  std::filesystem::create_directories(out_dir);
  const auto start = Clock::now();

  TrialRecord rec;
  rec.seed = train_cfg.seed;
  rec.best_checkpoint = out_dir / "best.ckpt";

  std::span<const EquationExample> train_examples = data.train->examples;
  if (train_cfg.train_limit > 0 && train_cfg.train_limit < train_examples.size()) {
    train_examples = train_examples.first(train_cfg.train_limit);
  }
  const auto encoded = encode_examples(train_examples, model.vocab());
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Rng shuffle_rng(train_cfg.seed, /*stream=*/0x73687566);
  Rng dropout_rng(train_cfg.seed, /*stream=*/0x64726f70);
  Adam adam(model.parameters(), adam_cfg);

  std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open " + (out_dir / "metrics.csv").string() + " for writing");
  metrics << "epoch,train_loss,val_em\n";

  double best = -1.0;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    if (train_cfg.shuffle) shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t loss_weight = 0;
    try {
      for (std::size_t first = 0; first < order.size(); first += train_cfg.batch_size) {
        ++step;
        const std::size_t n = std::min(train_cfg.batch_size, order.size() - first);
        std::vector<const EncodedExample*> members(n);
        for (std::size_t i = 0; i < n; ++i) members[i] = &encoded[order[first + i]];
        const Batch batch = model.make_batch(members);
        Tape tape;
        Tensor loss;
        {
          TapeScope<float> scope(tape);
          loss = ops::cross_entropy(model.forward(batch, true, dropout_rng), batch.targets, kPad);
        }
        const double value = loss.item();
        if (!std::isfinite(value)) throw NonFiniteError("non-finite training loss");
        model.zero_grad();
        tape.backward(loss);
        adam.step();
        loss_sum += value * static_cast<double>(n);
        loss_weight += n;
      }
    } catch (const NonFiniteError& e) {
      rec.error = e.what();
      rec.failed_epoch = epoch;
      rec.failed_step = step;
      rec.wall_seconds = seconds_since(start);
      write_text(out_dir / "record.json", rec.to_json().dump(2) + "\n");
      return rec;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_weight ? loss_sum / static_cast<double>(loss_weight) : 0.0;
    m.val_em = evaluate_em(model, data.val->examples, eval_options);
    m.seconds = seconds_since(epoch_start);
    rec.epochs.push_back(m);
    char line[96];
    std::snprintf(line, sizeof line, "%d,%.9g,%.17g\n", m.epoch, m.train_loss, m.val_em);
    metrics << line << std::flush;
    if (m.val_em > best) {
      best = m.val_em;
      rec.best_epoch = epoch;
      rec.best_val_em = m.val_em;
      model.save(rec.best_checkpoint, {{"epoch", epoch}, {"val_em", m.val_em}, {"seed", train_cfg.seed}});
    }
    if (on_epoch) on_epoch(m);
  }
  if (!metrics) throw std::runtime_error("write failed: " + (out_dir / "metrics.csv").string());

  auto best_model = Model::load(rec.best_checkpoint);
  const EvalReport report = evaluate(*best_model, data.test->examples, eval_options);
  rec.test_em = report.em_percent;
  emit_plot_data(report, out_dir / "eval", data.train_square);
  rec.completed = true;
  rec.wall_seconds = seconds_since(start);
  write_text(out_dir / "record.json", rec.to_json().dump(2) + "\n");
  return rec;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

void ExperimentConfig::validate() const {
  model.validate();
  train.validate();
  adam.validate();
  if (n_trials < 1) throw std::invalid_argument("experiment: n_trials must be >= 1");
  if (parallel < 1) throw std::invalid_argument("experiment: parallel must be >= 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["model"] = model.to_json();
  j["train"] = train.to_json();
  j["adam"] = adam.to_json();
  j["n_trials"] = n_trials;
  j["parallel"] = parallel;
  j["eval"] = {{"batch_size", eval.batch_size},
               {"max_len", eval.max_len},
               {"carry_digits", eval.carry_digits},
               {"top_k", eval.top_k},
               {"answer_bounds", {eval.answer_bounds.lo, eval.answer_bounds.hi}}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  const auto arch_name = j.at("model").at("arch").get<std::string>();
  const auto arch = architecture_from_string(arch_name);
  if (!arch) throw std::invalid_argument("experiment: unknown architecture '" + arch_name + "'");
  ExperimentConfig c = defaults(*arch);
  c.model = ModelConfig::from_json(j.at("model"));
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  if (j.contains("adam")) c.adam = AdamConfig::from_json(j.at("adam"));
  c.n_trials = get_or(j, "n_trials", c.n_trials);
  c.parallel = get_or(j, "parallel", c.parallel);
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    c.eval.batch_size = get_or(e, "batch_size", c.eval.batch_size);
    c.eval.max_len = get_or(e, "max_len", c.eval.max_len);
    c.eval.carry_digits = get_or(e, "carry_digits", c.eval.carry_digits);
    c.eval.top_k = get_or(e, "top_k", c.eval.top_k);
    if (e.contains("answer_bounds")) {
      c.eval.answer_bounds = {e.at("answer_bounds").at(0).get<std::int64_t>(), e.at("answer_bounds").at(1).get<std::int64_t>()};
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::defaults(Architecture arch) {
  ExperimentConfig c;
  c.model = ModelConfig::defaults(arch);
  c.adam = AdamConfig::for_architecture(arch);
  return c;
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json j;
  j["arch"] = to_string(arch);
  j["model"] = display_name(arch);
  j["param_count"] = param_count;
  j["n_trials"] = trials.size();
  j["n_completed"] = trials.size() - n_failed;
  j["n_failed"] = n_failed;
  j["val_em"] = {{"mean", val_em.mean}, {"sd", val_em.sd}, {"n", val_em.n}};
  j["test_em"] = {{"mean", test_em.mean}, {"sd", test_em.sd}, {"n", test_em.n}};
  j["trials"] = nlohmann::json::array();
  for (const auto& t : trials) j["trials"].push_back(t.to_json());
  return j;
}

RunSummary RunSummary::from_json(const nlohmann::json& j) {
  RunSummary s;
  const auto arch_name = j.at("arch").get<std::string>();
  const auto arch = architecture_from_string(arch_name);
  if (!arch) throw std::invalid_argument("summary: unknown architecture '" + arch_name + "'");
  s.arch = *arch;
  s.param_count = j.at("param_count").get<std::size_t>();
  s.n_failed = j.at("n_failed").get<std::size_t>();
  auto read = [](const nlohmann::json& m) {
    return MeanSd{m.at("mean").get<double>(), m.at("sd").get<double>(), m.at("n").get<std::size_t>()};
  };
  s.val_em = read(j.at("val_em"));
  s.test_em = read(j.at("test_em"));
  for (const auto& t : j.at("trials")) s.trials.push_back(TrialRecord::from_json(t));
  return s;
}

RunSummary run_trials(const ExperimentConfig& cfg, const Vocabulary& vocab, const TrialData& data,
                      const std::filesystem::path& out_dir, const TrialLog& log) {
  cfg.validate();
  if (!data.train || !data.val || !data.test) throw std::invalid_argument("run_trials: train/val/test datasets required");
  std::filesystem::create_directories(out_dir);

  nlohmann::json resolved = cfg.to_json();
  resolved["vocabulary_hash"] = vocab.hash();
  resolved["dataset_hashes"] = {{"train", dataset_hash(*data.train)},
                                {"val", dataset_hash(*data.val)},
                                {"test", dataset_hash(*data.test)}};
  resolved["train_square"] = {data.train_square.lo, data.train_square.hi};
  write_text(out_dir / "config.json", resolved.dump(2) + "\n");

  RunSummary summary;
  summary.arch = cfg.model.arch;
  summary.param_count = make_model(cfg.model, vocab, cfg.train.seed)->param_count();
  summary.trials.resize(static_cast<std::size_t>(cfg.n_trials));

  std::atomic<int> next{0};
  std::mutex log_mutex;
  auto say = [&](int trial, const std::string& msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(trial, msg);
  };
  auto worker = [&] {
    for (int i = next++; i < cfg.n_trials; i = next++) {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train.seed + static_cast<std::uint64_t>(i);
      const auto dir = out_dir / trial_dir_name(i, cfg.n_trials);
      TrialRecord rec;
      try {
        auto model = make_model(cfg.model, vocab, tc.seed);
        say(i, "start seed=" + std::to_string(tc.seed));
        rec = train_trial(*model, data, tc, cfg.adam, dir, cfg.eval, [&](const EpochMetrics& m) {
          char buf[128];
          std::snprintf(buf, sizeof buf, "epoch %d loss %.4f val_em %.2f (%.1fs)", m.epoch, m.train_loss, m.val_em,
                        m.seconds);
          say(i, buf);
        });
      } catch (const std::exception& e) {
        rec.seed = tc.seed;
        rec.completed = false;
        rec.error = e.what();
      }
      say(i, rec.completed ? "done test_em=" + std::to_string(rec.test_em) : "failed: " + rec.error);
      summary.trials[static_cast<std::size_t>(i)] = std::move(rec);
    }
  };
  const int n_workers = std::min(cfg.parallel, cfg.n_trials);
  std::vector<std::thread> threads;
  for (int w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<double> vals;
  std::vector<double> tests;
  for (const auto& t : summary.trials) {
    if (!t.completed) {
      ++summary.n_failed;
      continue;
    }
    vals.push_back(t.best_val_em);
    tests.push_back(t.test_em);
  }
  summary.val_em = mean_sd(vals);
  summary.test_em = mean_sd(tests);
  write_text(out_dir / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace extralab

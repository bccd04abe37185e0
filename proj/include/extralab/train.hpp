// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "extralab/eval.hpp"
#include "extralab/models.hpp"
#include "extralab/taskgen.hpp"

namespace extralab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  nlohmann::json to_json() const;
  static AdamConfig from_json(const nlohmann::json& j);
  // MLP and Seq2seq: lr 1e-3, beta2 0.999, eps 1e-8.
  // Transformer: lr 1e-4, beta2 0.98, eps 1e-9.
  static AdamConfig for_architecture(Architecture arch);
};

template <class T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;
};

// Thrown when a gradient (or loss) is NaN or infinite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One bias-corrected Adam update of `params` in place; increments state.t.
// State vectors are sized on first use. Arithmetic is carried out in double.
template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params/grads size mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
  }
  if (state.m.size() != params.size() || state.v.size() != params.size() || state.t < 0) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameters");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = cfg.beta1 * static_cast<double>(state.m[i]) + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * static_cast<double>(state.v[i]) + (1.0 - cfg.beta2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    params[i] = static_cast<T>(static_cast<double>(params[i]) - cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon));
  }
}

// Adam over a model's named parameters.
class Adam {
 public:
  Adam(std::vector<NamedTensor>& params, AdamConfig cfg);
  // Throws NonFiniteError naming the first parameter with a non-finite
  // gradient; no parameter is modified in that case.
  void step();
  std::int64_t steps() const { return steps_; }

 private:
  std::vector<NamedTensor>* params_;
  AdamConfig cfg_;
  std::vector<AdamState<float>> states_;
  std::int64_t steps_ = 0;
};

struct TrainConfig {
  std::size_t batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::size_t train_limit = 0;  // 0: use the whole training split

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_em = 0.0;
  double seconds = 0.0;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
  double best_val_em = 0.0;
  std::filesystem::path best_checkpoint;
  double test_em = 0.0;
  double wall_seconds = 0.0;
  bool completed = false;
  std::string error;      // set when the trial aborted
  int failed_epoch = 0;   // 1-based; 0 when not failed during training
  std::int64_t failed_step = 0;

  nlohmann::json to_json() const;
  static TrialRecord from_json(const nlohmann::json& j);
};

struct TrialData {
  const Dataset* train = nullptr;
  const Dataset* val = nullptr;
  const Dataset* test = nullptr;
  IntRange train_square{500, 1500};
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Trains `model` from its current weights, writing into out_dir:
//   best.ckpt, metrics.csv (epoch,train_loss,val_em), record.json and eval/
//   (plot data for the test split). Test EM comes from reloading best.ckpt.
// A non-finite loss or gradient ends the trial with completed = false.
TrialRecord train_trial(Model& model, const TrialData& data, const TrainConfig& train_cfg, const AdamConfig& adam_cfg,
                        const std::filesystem::path& out_dir, const EvalOptions& eval_options = {},
                        const EpochCallback& on_epoch = {});

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};
MeanSd mean_sd(std::span<const double> values);

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;  // train.seed is the base seed; trial i uses base + i
  AdamConfig adam;
  int n_trials = 10;
  int parallel = 1;
  EvalOptions eval;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig defaults(Architecture arch);
};

struct RunSummary {
  Architecture arch = Architecture::transformer;
  std::size_t param_count = 0;
  std::vector<TrialRecord> trials;
  MeanSd val_em;
  MeanSd test_em;
  std::size_t n_failed = 0;

  nlohmann::json to_json() const;
  static RunSummary from_json(const nlohmann::json& j);
};

using TrialLog = std::function<void(int trial, const std::string& message)>;

// Runs cfg.n_trials trials (up to cfg.parallel at once) into
// out_dir/trial_XX, after writing out_dir/config.json. Writes summary.json,
// computed over completed trials.
RunSummary run_trials(const ExperimentConfig& cfg, const Vocabulary& vocab, const TrialData& data,
                      const std::filesystem::path& out_dir, const TrialLog& log = {});

}  // namespace extralab

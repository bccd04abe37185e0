// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Everything goes through the C API; this file only
// turns flags into JSON requests, guards output paths and maps status codes
// to exit codes (0 success, 1 runtime failure, 2 usage error).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "extralab/extralab.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log_to_stderr(int level, const char* message, void* /*user*/) {
  std::fprintf(stderr, "%s%s\n", level > 0 ? "warning: " : "", message);
}

int fail(extralab_status status) {
  std::fprintf(stderr, "error: %s\n", extralab_last_error());
  return status == EXTRALAB_E_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
}

// Takes ownership of a string returned by the C API.
std::string take(char* s) {
  std::string out = s ? s : "";
  extralab_string_free(s);
  return out;
}

// Refuses to write into a non-empty directory unless forced.
void guard_dir(const std::string& out, bool force) {
  if (out.empty()) throw UsageError("--out is required");
  if (fs::exists(out) && !fs::is_directory(out)) throw UsageError(out + " exists and is not a directory");
  if (!force && fs::is_directory(out) && !fs::is_empty(out)) {
    throw UsageError(out + " already exists and is not empty; pass --force to overwrite");
  }
}

void guard_file(const std::string& out, bool force) {
  if (!force && fs::exists(out)) throw UsageError(out + " already exists; pass --force to overwrite");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config " + path);
  auto j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("config " + path + " is not a JSON object");
  return j;
}

std::optional<std::pair<long long, long long>> parse_range(const std::string& text) {
  long long lo = 0;
  long long hi = 0;
  char comma = 0;
  std::istringstream ss(text);
  if (!(ss >> lo >> comma >> hi) || comma != ',' || !ss.eof() || lo > hi) return std::nullopt;
  return std::pair{lo, hi};
}

// ------------------------------------------------------------------ gen

struct GenArgs {
  std::string task;
  std::uint64_t seed = 0;
  std::string out;
  int base = 0;
  std::optional<std::size_t> n_train, n_val, n_test, n_pairs;
  int max_digits = 100;
  int modulus = 97;
  std::string op = "add";
  double train_fraction = 0.5;
  std::string terms;
  bool force = false;
};

int run_gen(const GenArgs& a) {
  guard_dir(a.out, a.force);
  json req{{"task", a.task}, {"seed", a.seed}};
  if (a.task == "nbase") req["base"] = a.base;
  if (a.n_train) req["n_train"] = *a.n_train;
  if (a.n_val) req["n_val"] = *a.n_val;
  if (a.n_test) req["n_test"] = *a.n_test;
  if (a.task == "large-digit") {
    req["n_pairs"] = a.n_pairs.value_or(100000);
    req["max_digits"] = a.max_digits;
  }
  if (a.task == "binop") {
    req["modulus"] = a.modulus;
    req["op"] = a.op;
    req["train_fraction"] = a.train_fraction;
    if (!a.terms.empty()) {
      auto t = json::parse(a.terms, nullptr, false);
      if (t.is_discarded()) throw UsageError("--terms must be JSON such as [[1,2,0],[1,0,1]]");
      req["terms"] = t;
    }
  }
  char* manifest = nullptr;
  if (auto st = extralab_generate(req.dump().c_str(), a.out.c_str(), &manifest)) return fail(st);
  take(manifest);
  std::fprintf(stderr, "wrote %s\n", a.out.c_str());
  return kExitOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string arch;
  std::optional<int> trials, epochs, parallel;
  std::optional<std::size_t> train_limit, batch_size;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

int run_train(TrainArgs a) {
  json file = a.config.empty() ? json::object() : read_json_file(a.config);
  // Flags override file values.
  auto pick = [&](auto& flag, const char* key) {
    using T = typename std::decay_t<decltype(flag)>::value_type;
    if (!flag && file.contains(key)) flag = file[key].get<T>();
  };
  if (a.arch.empty() && file.contains("arch")) a.arch = file["arch"].get<std::string>();
  if (a.data.empty() && file.contains("data")) a.data = file["data"].get<std::string>();
  if (a.out.empty() && file.contains("out")) a.out = file["out"].get<std::string>();
  pick(a.trials, "trials");
  pick(a.epochs, "epochs");
  pick(a.parallel, "parallel");
  pick(a.train_limit, "train_limit");
  pick(a.batch_size, "batch_size");
  pick(a.seed, "seed");
  if (a.arch.empty()) throw UsageError("--arch (or \"arch\" in --config) is required");
  if (a.data.empty()) throw UsageError("--data (or \"data\" in --config) is required");
  guard_dir(a.out, a.force);

  char* defaults = nullptr;
  if (auto st = extralab_default_config(a.arch.c_str(), &defaults)) return fail(st);
  json cfg = json::parse(take(defaults));
  if (file.contains("model")) cfg["model"].update(file["model"]);
  if (file.contains("adam")) cfg["adam"].update(file["adam"]);
  if (file.contains("eval")) cfg["eval"].update(file["eval"]);
  cfg["model"]["arch"] = a.arch;
  if (a.trials) cfg["n_trials"] = *a.trials;
  if (a.parallel) cfg["parallel"] = *a.parallel;
  if (a.epochs) cfg["train"]["epochs"] = *a.epochs;
  if (a.train_limit) cfg["train"]["train_limit"] = *a.train_limit;
  if (a.batch_size) cfg["train"]["batch_size"] = *a.batch_size;
  if (a.seed) cfg["train"]["seed"] = *a.seed;

  char* summary = nullptr;
  if (auto st = extralab_train(cfg.dump().c_str(), a.data.c_str(), a.out.c_str(), &summary)) return fail(st);
  const auto s = json::parse(take(summary));
  std::fprintf(stderr, "%s: val EM %.2f (%.2f), test EM %.2f (%.2f) over %d completed trials -> %s\n",
               s["model"].get<std::string>().c_str(), s["val_em"]["mean"].get<double>(),
               s["val_em"]["sd"].get<double>(), s["test_em"]["mean"].get<double>(), s["test_em"]["sd"].get<double>(),
               s["n_completed"].get<int>(), a.out.c_str());
  return s["n_completed"].get<int>() > 0 ? kExitOk : kExitRuntime;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string train_square;
  std::optional<std::size_t> batch_size;
  std::optional<int> carry_digits;
  bool force = false;
};

int run_eval(const EvalArgs& a) {
  guard_dir(a.out, a.force);
  json opts = json::object();
  if (a.batch_size) opts["batch_size"] = *a.batch_size;
  if (a.carry_digits) opts["carry_digits"] = *a.carry_digits;
  if (!a.train_square.empty()) {
    const auto r = parse_range(a.train_square);
    if (!r) throw UsageError("--train-square must look like 500,1500");
    opts["train_square"] = {r->first, r->second};
  }
  char* report = nullptr;
  if (auto st = extralab_eval(a.checkpoint.c_str(), a.data.c_str(), a.out.c_str(), opts.dump().c_str(), &report)) {
    return fail(st);
  }
  const auto r = json::parse(take(report));
  std::printf("EM %.2f%% over %zu examples; plot data in %s\n", r["em_percent"].get<double>(),
              r["n_records"].get<std::size_t>(), a.out.c_str());
  return kExitOk;
}

// ------------------------------------------------------------------ report

int run_report(const std::vector<std::string>& runs, const std::string& out, bool force) {
  if (!out.empty()) guard_file(out, force);
  std::vector<const char*> dirs;
  for (const auto& r : runs) dirs.push_back(r.c_str());
  char* table = nullptr;
  if (auto st = extralab_report(dirs.data(), dirs.size(), &table)) return fail(st);
  const auto text = take(table);
  std::fputs(text.c_str(), stdout);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
      std::fprintf(stderr, "error: cannot write %s\n", out.c_str());
      return kExitRuntime;
    }
  }
  return kExitOk;
}

// ------------------------------------------------------------------ probe

struct ProbeArgs {
  std::string mode = "replay";
  std::string fixture;
  std::string endpoint;
  std::string out;
  std::size_t pairs = 0;
  int max_digits = 100;
  std::uint64_t seed = 0;
  int max_in_flight = 4;
  double rps = 0.0;
  int max_attempts = 5;
  bool all_samples = false;
  bool force = false;
};

int run_probe(const ProbeArgs& a) {
  guard_dir(a.out, a.force);
  json req{{"mode", a.mode},
           {"pairs", a.pairs},
           {"max_digits", a.max_digits},
           {"seed", a.seed},
           {"max_in_flight", a.max_in_flight},
           {"requests_per_second", a.rps},
           {"max_attempts", a.max_attempts},
           {"sampling", {{"record_all_samples", a.all_samples}}}};
  if (!a.fixture.empty()) req["fixture"] = a.fixture;
  if (!a.endpoint.empty()) req["endpoint"] = a.endpoint;
  char* summary = nullptr;
  if (auto st = extralab_probe(req.dump().c_str(), a.out.c_str(), &summary)) return fail(st);
  const auto s = json::parse(take(summary));
  const auto& c = s["counts"];
  std::fprintf(stderr, "non-numerical %zu, numerical-incorrect %zu, correct %zu, failed %zu -> %s\n",
               c["non_numerical"].get<std::size_t>(), c["numerical_incorrect"].get<std::size_t>(),
               c["correct"].get<std::size_t>(), s["n_failed"].get<std::size_t>(), a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extralab: extrapolation experiments on arithmetic tasks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(extralab_version()));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate datasets");
  gen_cmd->add_option("--task", gen.task, "small-digit | larger-small-digit | nbase | large-digit | binop")
      ->required()
      ->check(CLI::IsMember({"small-digit", "larger-small-digit", "nbase", "large-digit", "binop"}));
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--base", gen.base, "Numeral base for nbase (2..36)")->check(CLI::Range(2, 36));
  gen_cmd->add_option("--n-train", gen.n_train, "Override the training split size");
  gen_cmd->add_option("--n-val", gen.n_val, "Override the validation split size");
  gen_cmd->add_option("--n-test", gen.n_test, "Override the test split size");
  gen_cmd->add_option("--n-pairs", gen.n_pairs, "large-digit: number of pairs");
  gen_cmd->add_option("--max-digits", gen.max_digits, "large-digit: maximum operand digits")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--modulus", gen.modulus, "binop: modulus p")->check(CLI::Range(2, 1000000));
  gen_cmd->add_option("--op", gen.op, "binop: add | sub | polynomial")->check(CLI::IsMember({"add", "sub", "polynomial"}));
  gen_cmd->add_option("--terms", gen.terms, "binop polynomial terms as JSON [[coef, pa, pb], ...]");
  gen_cmd->add_option("--train-fraction", gen.train_fraction, "binop: fraction of rows in train")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_flag("--force", gen.force, "Overwrite an existing output directory");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train models over several seeded trials");
  train_cmd->add_option("--config", train.config, "JSON config mirroring the flag names")->check(CLI::ExistingFile);
  train_cmd->add_option("--data", train.data, "Directory written by `gen`");
  train_cmd->add_option("--out", train.out, "Run directory");
  train_cmd->add_option("--arch", train.arch, "mlp | seq2seq | transformer")
      ->check(CLI::IsMember({"mlp", "seq2seq", "transformer"}));
  train_cmd->add_option("--trials", train.trials, "Number of trials")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train.epochs, "Epochs per trial")->check(CLI::PositiveNumber);
  train_cmd->add_option("--train-limit", train.train_limit, "Use only the first N training examples");
  train_cmd->add_option("--batch-size", train.batch_size, "Batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--parallel", train.parallel, "Trials run concurrently")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "Base seed; trial i uses seed + i");
  train_cmd->add_flag("--force", train.force, "Overwrite an existing run directory");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write plot data");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Split file (.jsonl)")->required();
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->add_option("--train-square", ev.train_square, "Training square lo,hi (default: from spec.json)");
  eval_cmd->add_option("--batch-size", ev.batch_size, "Decode batch size")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--carry-digits", ev.carry_digits, "Digits in the carry decomposition")->check(CLI::Range(1, 18));
  eval_cmd->add_flag("--force", ev.force, "Overwrite an existing output directory");

  std::vector<std::string> runs;
  std::string report_out;
  bool report_force = false;
  auto* report_cmd = app.add_subcommand("report", "Summarize run directories as a table");
  report_cmd->add_option("runs", runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report_out, "Also write the table to this file");
  report_cmd->add_flag("--force", report_force, "Overwrite --out");

  ProbeArgs pr;
  auto* probe_cmd = app.add_subcommand("probe", "Probe a completion endpoint on large-digit addition");
  probe_cmd->add_option("--mode", pr.mode, "live | replay")->check(CLI::IsMember({"live", "replay"}));
  probe_cmd->add_option("--fixture", pr.fixture, "Replay fixture (.jsonl)");
  probe_cmd->add_option("--endpoint", pr.endpoint, "Completion URL (default: $EXTRALAB_PROBE_ENDPOINT)");
  probe_cmd->add_option("--out", pr.out, "Output directory")->required();
  probe_cmd->add_option("--pairs", pr.pairs, "Number of prompts (replay: first N fixture rows)");
  probe_cmd->add_option("--max-digits", pr.max_digits, "Maximum operand digits")->check(CLI::PositiveNumber);
  probe_cmd->add_option("--seed", pr.seed, "Prompt generator seed");
  probe_cmd->add_option("--max-in-flight", pr.max_in_flight, "Concurrent live requests")->check(CLI::PositiveNumber);
  probe_cmd->add_option("--rps", pr.rps, "Live request rate limit per second (0: none)")->check(CLI::NonNegativeNumber);
  probe_cmd->add_option("--max-attempts", pr.max_attempts, "Attempts per prompt")->check(CLI::PositiveNumber);
  probe_cmd->add_flag("--all-samples", pr.all_samples, "Persist every returned sample");
  probe_cmd->add_flag("--force", pr.force, "Overwrite an existing output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  extralab_set_log_callback(log_to_stderr, nullptr);
  try {
    if (*gen_cmd) {
      if (gen.task == "nbase" && gen.base == 0) throw UsageError("--task nbase requires --base");
      return run_gen(gen);
    }
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(ev);
    if (*report_cmd) return run_report(runs, report_out, report_force);
    if (*probe_cmd) {
      if (pr.mode == "replay" && pr.fixture.empty()) throw UsageError("--mode replay requires --fixture");
      return run_probe(pr);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/extralab.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>

#include <json.hpp>

#include "extralab/eval.hpp"
#include "extralab/llmprobe.hpp"
#include "extralab/models.hpp"
#include "extralab/taskgen.hpp"
#include "extralab/train.hpp"
#include "extralab/vocab.hpp"

struct extralab_vocab {
  extralab::Vocabulary vocab;
};

struct extralab_model {
  std::unique_ptr<extralab::Model> model;
};

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace extralab;

constexpr const char* kVersion = "1.0.0";

thread_local std::string g_last_error;

std::mutex g_log_mutex;
extralab_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_info(const std::string& message, int level = 0) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(level, message.c_str(), g_log_user);
}

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Fn>
extralab_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EXTRALAB_OK;
  } catch (const NonFiniteError& e) {
    g_last_error = e.what();
    return EXTRALAB_E_NONFINITE;
  } catch (const CompletionError& e) {
    g_last_error = e.what();
    return EXTRALAB_E_NETWORK;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return EXTRALAB_E_IO;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return EXTRALAB_E_IO;
  } catch (const FormatError& e) {
    g_last_error = e.what();
    return EXTRALAB_E_FORMAT;
  } catch (const json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return EXTRALAB_E_FORMAT;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return EXTRALAB_E_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EXTRALAB_E_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return EXTRALAB_E_RUNTIME;
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

json parse_json_arg(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  auto j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  return j;
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path.string());
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

json task_spec_json(const TaskSpec& t) {
  return {{"kind", to_string(t.kind)}, {"base", t.base}, {"modulus", t.modulus}};
}

TaskSpec task_spec_from_json(const json& j) {
  TaskSpec t;
  const auto kind = task_kind_from_string(j.at("kind").get<std::string>());
  require(kind.has_value(), "unknown task kind '" + j.at("kind").get<std::string>() + "'");
  t.kind = *kind;
  t.base = get_or(j, "base", 10);
  t.modulus = get_or(j, "modulus", 0);
  return t;
}

IntRange range_from_json(const json& j) { return {j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>()}; }

// ---------------------------------------------------------------- generate

void apply_split_overrides(SplitSpec& spec, const json& req) {
  spec.n_train = get_or(req, "n_train", spec.n_train);
  spec.n_val = get_or(req, "n_val", spec.n_val);
  spec.n_test = get_or(req, "n_test", spec.n_test);
  spec.validate();
}

json generate(const json& req, const fs::path& out_dir) {
  const auto task = get_or<std::string>(req, "task", "");
  const auto seed = get_or<std::uint64_t>(req, "seed", 0);
  fs::create_directories(out_dir);
  json manifest;
  manifest["generator"] = kGeneratorVersion;
  manifest["task"] = task;
  manifest["seed"] = seed;

  auto write_addition = [&](const AdditionSplits& s, const SplitSpec& spec, const Vocabulary& vocab) {
    write_dataset_jsonl(s.train, out_dir / "train.jsonl");
    write_dataset_jsonl(s.val, out_dir / "val.jsonl");
    write_dataset_jsonl(s.test, out_dir / "test.jsonl");
    manifest["task_spec"] = task_spec_json(vocab.task());
    manifest["split_spec"] = json::parse(split_spec_to_json(spec));
    manifest["vocabulary"] = json::parse(vocab.to_json());
    manifest["vocabulary_hash"] = vocab.hash();
    manifest["files"] = {{"train", "train.jsonl"}, {"val", "val.jsonl"}, {"test", "test.jsonl"}};
    manifest["dataset_hashes"] = {
        {"train", dataset_hash(s.train)}, {"val", dataset_hash(s.val)}, {"test", dataset_hash(s.test)}};
    manifest["counts"] = {{"train", s.train.examples.size()}, {"val", s.val.examples.size()},
                          {"test", s.test.examples.size()}};
  };

  if (task == "small-digit" || task == "larger-small-digit" || task == "nbase") {
    SplitSpec spec = task == "larger-small-digit" ? larger_small_digit_spec(seed) : small_digit_spec(seed);
    apply_split_overrides(spec, req);
    TaskSpec ts{TaskKind::decimal_addition, 10, 0};
    if (task == "nbase") {
      const int base = get_or(req, "base", 0);
      require(base >= 2 && base <= 36, "nbase: --base must lie in 2..36 (got " + std::to_string(base) + ")");
      ts = {TaskKind::nbase_addition, base, 0};
    }
    const auto vocab = Vocabulary::build(ts);
    log_info("generating " + task + " (seed " + std::to_string(seed) + ")");
    write_addition(gen_addition(spec, vocab), spec, vocab);
  } else if (task == "large-digit") {
    const auto n_pairs = get_or<std::size_t>(req, "n_pairs", 100000);
    const int max_digits = get_or(req, "max_digits", 100);
    require(n_pairs >= 1, "large-digit: n_pairs must be >= 1");
    require(max_digits >= 1, "large-digit: max_digits must be >= 1");
    log_info("generating " + std::to_string(n_pairs) + " large-digit pairs");
    const auto pairs = gen_large_digit_pairs(n_pairs, max_digits, seed);
    std::string lines;
    for (const auto& p : pairs) {
      nlohmann::ordered_json j;
      j["a"] = p.a.to_decimal();
      j["b"] = p.b.to_decimal();
      j["c"] = p.c.to_decimal();
      lines += j.dump() + "\n";
    }
    write_text(out_dir / "pairs.jsonl", lines);
    manifest["n_pairs"] = n_pairs;
    manifest["max_digits"] = max_digits;
    manifest["files"] = {{"pairs", "pairs.jsonl"}};
    manifest["dataset_hashes"] = {{"pairs", fnv1a_hex(lines)}};
  } else if (task == "binop") {
    BinOpTableSpec spec;
    spec.seed = seed;
    spec.modulus = get_or(req, "modulus", spec.modulus);
    spec.train_fraction = get_or(req, "train_fraction", spec.train_fraction);
    const auto op = get_or<std::string>(req, "op", "add");
    if (op == "add") spec.op = BinOpKind::add;
    else if (op == "sub") spec.op = BinOpKind::sub;
    else if (op == "polynomial") {
      spec.op = BinOpKind::polynomial;
      require(req.contains("terms") && req["terms"].is_array(), "binop polynomial needs terms [[coef, pa, pb], ...]");
      for (const auto& t : req["terms"]) spec.terms.push_back({t.at(0).get<std::int64_t>(), t.at(1).get<int>(), t.at(2).get<int>()});
    } else {
      throw std::invalid_argument("binop: op must be add, sub or polynomial (got '" + op + "')");
    }
    log_info("generating binop table mod " + std::to_string(spec.modulus));
    const auto s = gen_binop_table(spec);
    write_dataset_jsonl(s.train, out_dir / "train.jsonl");
    write_dataset_jsonl(s.test, out_dir / "test.jsonl");
    const auto vocab = Vocabulary::build({TaskKind::binop_table, 0, spec.modulus});
    manifest["task_spec"] = task_spec_json(vocab.task());
    manifest["binop"] = {{"modulus", spec.modulus}, {"op", op}, {"train_fraction", spec.train_fraction}};
    if (spec.op == BinOpKind::polynomial) manifest["binop"]["terms"] = req["terms"];
    manifest["vocabulary"] = json::parse(vocab.to_json());
    manifest["vocabulary_hash"] = vocab.hash();
    manifest["files"] = {{"train", "train.jsonl"}, {"test", "test.jsonl"}};
    manifest["dataset_hashes"] = {{"train", dataset_hash(s.train)}, {"test", dataset_hash(s.test)}};
    manifest["counts"] = {{"train", s.train.examples.size()}, {"test", s.test.examples.size()}};
  } else {
    throw std::invalid_argument("unknown task '" + task +
                                "' (expected small-digit, larger-small-digit, nbase, large-digit or binop)");
  }
  write_text(out_dir / "spec.json", manifest.dump(2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------- train

struct LoadedData {
  Vocabulary vocab = Vocabulary::build({});
  Dataset train;
  Dataset val;
  Dataset test;
  IntRange train_square{500, 1500};
};

json read_manifest(const fs::path& data_dir) {
  const auto path = data_dir / "spec.json";
  require_file(path, "dataset spec");
  auto j = json::parse(read_text(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("malformed dataset spec " + path.string());
  return j;
}

LoadedData load_data(const fs::path& data_dir) {
  LoadedData d;
  const auto manifest = read_manifest(data_dir);
  if (!manifest.contains("vocabulary")) throw FormatError("dataset spec lacks a vocabulary: " + data_dir.string());
  d.vocab = Vocabulary::from_json(manifest["vocabulary"].dump());
  if (manifest.contains("split_spec")) {
    d.train_square = range_from_json(manifest["split_spec"].at("train_range"));
  }
  auto load = [&](Dataset& ds, Split split, const char* file) {
    const auto path = data_dir / file;
    require_file(path, "dataset split");
    ds.split = split;
    ds.examples = read_dataset_jsonl(path);
  };
  load(d.train, Split::train, "train.jsonl");
  load(d.val, Split::val, "val.jsonl");
  load(d.test, Split::test, "test.jsonl");
  return d;
}

// ---------------------------------------------------------------- eval

EvalOptions eval_options_from_json(const json& j, EvalOptions o = {}) {
  o.batch_size = get_or(j, "batch_size", o.batch_size);
  o.max_len = get_or(j, "max_len", o.max_len);
  o.carry_digits = get_or(j, "carry_digits", o.carry_digits);
  o.top_k = get_or(j, "top_k", o.top_k);
  if (j.contains("answer_bounds")) o.answer_bounds = range_from_json(j["answer_bounds"]);
  require(o.batch_size >= 1, "eval: batch_size must be >= 1");
  require(o.top_k >= 1, "eval: top_k must be >= 1");
  require(o.carry_digits >= 1 && o.carry_digits <= 18, "eval: carry_digits must lie in 1..18");
  return o;
}

// ---------------------------------------------------------------- report

std::string format_params(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fM", static_cast<double>(n) / 1e6);
  return buf;
}

std::string format_em(const MeanSd& m) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f)", m.mean, m.sd);
  return buf;
}

std::string report(const char* const* run_dirs, std::size_t n_runs) {
  require(n_runs >= 1 && run_dirs, "report needs at least one run directory");
  std::vector<RunSummary> rows;
  for (std::size_t i = 0; i < n_runs; ++i) {
    require(run_dirs[i] != nullptr, "null run directory");
    const auto path = fs::path(run_dirs[i]) / "summary.json";
    require_file(path, "run summary");
    rows.push_back(RunSummary::from_json(json::parse(read_text(path))));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RunSummary& a, const RunSummary& b) { return a.arch < b.arch; });
  const char* fmt = "%-12s %-10s %-18s %-18s %s\n";
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, fmt, "Model", "Parameter", "Validation EM (%)", "Test EM (%)", "Trials");
  out += line;
  for (const auto& r : rows) {
    const auto trials = std::to_string(r.trials.size() - r.n_failed) + "/" + std::to_string(r.trials.size());
    std::snprintf(line, sizeof line, fmt, display_name(r.arch), format_params(r.param_count).c_str(),
                  format_em(r.val_em).c_str(), format_em(r.test_em).c_str(), trials.c_str());
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------- probe

json probe(const json& req, const fs::path& out_dir) {
  const auto mode = get_or<std::string>(req, "mode", "replay");
  require(mode == "live" || mode == "replay", "probe: mode must be live or replay (got '" + mode + "')");
  const auto pairs = get_or<std::size_t>(req, "pairs", 0);
  const int max_digits = get_or(req, "max_digits", 100);
  const auto seed = get_or<std::uint64_t>(req, "seed", 0);
  require(max_digits >= 1, "probe: max_digits must be >= 1");

  SamplingParams params;
  if (req.contains("sampling")) {
    const auto& s = req["sampling"];
    params.maximum_tokens = get_or(s, "maximum_tokens", params.maximum_tokens);
    params.temperature = get_or(s, "temperature", params.temperature);
    params.top_p = get_or(s, "top_p", params.top_p);
    params.top_k = get_or(s, "top_k", params.top_k);
    params.n_samples = get_or(s, "n_samples", params.n_samples);
    params.record_all_samples = get_or(s, "record_all_samples", params.record_all_samples);
  }
  params.validate();

  std::vector<ProbeResponse> responses;
  if (mode == "replay") {
    const auto fixture_path = get_or<std::string>(req, "fixture", "");
    require(!fixture_path.empty(), "probe replay needs --fixture");
    require_file(fixture_path, "fixture");
    std::vector<FixtureRecord> fixture;
    try {
      fixture = read_fixture(fixture_path);
    } catch (const std::runtime_error& e) {
      throw FormatError(e.what());
    }
    const bool self_describing =
        std::all_of(fixture.begin(), fixture.end(), [](const FixtureRecord& r) { return r.prompt.has_value(); });
    std::vector<Prompt> prompts;
    if (!self_describing) {
      std::size_t n = pairs > 0 ? pairs : 0;
      for (const auto& r : fixture) n = std::max(n, r.prompt_id + 1);
      prompts = render_prompts(gen_large_digit_pairs(n, max_digits, seed));
    }
    log_info("replaying " + std::to_string(pairs > 0 ? std::min(pairs, fixture.size()) : fixture.size()) +
             " fixture records");
    responses = probe_replay(fixture, prompts, pairs);
  } else {
    EndpointConfig endpoint;
    const auto url = get_or<std::string>(req, "endpoint", "");
    if (url.empty()) {
      endpoint = endpoint_from_env();
    } else {
      endpoint.url = url;
      if (const char* token = std::getenv(kTokenEnv)) endpoint.token = token;
      if (const char* model = std::getenv(kModelEnv)) endpoint.model = model;
    }
    const auto n = pairs > 0 ? pairs : std::size_t{100000};
    const auto prompts = render_prompts(gen_large_digit_pairs(n, max_digits, seed));
    LiveOptions opts;
    opts.max_in_flight = get_or(req, "max_in_flight", opts.max_in_flight);
    opts.requests_per_second = get_or(req, "requests_per_second", opts.requests_per_second);
    opts.retry.max_attempts = get_or(req, "max_attempts", opts.retry.max_attempts);
    opts.progress = [](std::size_t done, std::size_t total) {
      if (done % 100 == 0 || done == total) log_info("probed " + std::to_string(done) + "/" + std::to_string(total));
    };
    fs::create_directories(out_dir);
    auto client = make_http_client(endpoint);
    log_info("probing " + std::to_string(prompts.size()) + " prompts at " + endpoint.url);
    responses = probe_live(*client, prompts, params, opts, out_dir / "raw_completions.jsonl");
  }
  const auto summary = summarize(responses);
  write_probe_outputs(responses, summary, params, out_dir);
  if (summary.n_failed > 0) log_info(std::to_string(summary.n_failed) + " prompts failed and were excluded", 1);
  return json::parse(summary_json(summary, params));
}

}  // namespace

extern "C" {

const char* extralab_version(void) { return kVersion; }

const char* extralab_status_string(extralab_status status) {
  switch (status) {
    case EXTRALAB_OK: return "ok";
    case EXTRALAB_E_INVALID_ARGUMENT: return "invalid argument";
    case EXTRALAB_E_IO: return "i/o error";
    case EXTRALAB_E_FORMAT: return "format error";
    case EXTRALAB_E_NONFINITE: return "non-finite value";
    case EXTRALAB_E_NETWORK: return "network error";
    case EXTRALAB_E_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

const char* extralab_last_error(void) { return g_last_error.c_str(); }

void extralab_string_free(char* s) { std::free(s); }

void extralab_set_log_callback(extralab_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

extralab_status extralab_vocab_create(const char* task_json, extralab_vocab** out) {
  return guard([&] {
    require(out != nullptr, "out must not be null");
    *out = nullptr;
    const auto j = parse_json_arg(task_json, "task");
    auto v = std::make_unique<extralab_vocab>(extralab_vocab{Vocabulary::build(task_spec_from_json(j))});
    *out = v.release();
  });
}

void extralab_vocab_free(extralab_vocab* vocab) { delete vocab; }

extralab_status extralab_vocab_size(const extralab_vocab* vocab, size_t* out) {
  return guard([&] {
    require(vocab && out, "vocab and out must not be null");
    *out = vocab->vocab.size();
  });
}

extralab_status extralab_vocab_encode(const extralab_vocab* vocab, const char* text, int32_t* ids, size_t capacity,
                                      size_t* count) {
  return guard([&] {
    require(vocab && text && count, "vocab, text and count must not be null");
    require(ids || capacity == 0, "ids must not be null when capacity > 0");
    const auto seq = vocab->vocab.encode(text);
    *count = seq.ids.size();
    std::copy_n(seq.ids.begin(), std::min(capacity, seq.ids.size()), ids);
  });
}

extralab_status extralab_vocab_decode(const extralab_vocab* vocab, const int32_t* ids, size_t count, char** text) {
  return guard([&] {
    require(vocab && text && (ids || count == 0), "vocab, ids and text must not be null");
    TokenSeq seq{std::vector<TokenId>(ids, ids + count)};
    for (auto id : seq.ids) require(vocab->vocab.contains(id), "token id " + std::to_string(id) + " out of range");
    set_out(text, vocab->vocab.decode(seq));
  });
}

extralab_status extralab_generate(const char* request_json, const char* out_dir, char** manifest_json) {
  return guard([&] {
    require(out_dir && *out_dir, "out_dir must be given");
    const auto m = generate(parse_json_arg(request_json, "request"), out_dir);
    set_out(manifest_json, m.dump(2));
  });
}

extralab_status extralab_default_config(const char* arch, char** config_json) {
  return guard([&] {
    require(arch && config_json, "arch and config_json must not be null");
    const auto a = architecture_from_string(arch);
    require(a.has_value(), std::string("unknown architecture '") + arch + "' (expected mlp, seq2seq or transformer)");
    set_out(config_json, ExperimentConfig::defaults(*a).to_json().dump(2));
  });
}

extralab_status extralab_train(const char* config_json, const char* data_dir, const char* out_dir,
                               char** summary_json) {
  return guard([&] {
    require(data_dir && *data_dir, "data_dir must be given");
    require(out_dir && *out_dir, "out_dir must be given");
    const auto cfg = ExperimentConfig::from_json(parse_json_arg(config_json, "config"));
    const auto data = load_data(data_dir);
    log_info("loaded " + std::to_string(data.train.examples.size()) + "/" + std::to_string(data.val.examples.size()) +
             "/" + std::to_string(data.test.examples.size()) + " train/val/test examples from " + data_dir);
    const TrialData td{&data.train, &data.val, &data.test, data.train_square};
    const auto summary = run_trials(cfg, data.vocab, td, out_dir, [](int trial, const std::string& msg) {
      log_info("trial " + std::to_string(trial) + ": " + msg);
    });
    if (summary.n_failed > 0) {
      log_info(std::to_string(summary.n_failed) + " of " + std::to_string(summary.trials.size()) + " trials failed", 1);
    }
    set_out(summary_json, summary.to_json().dump(2));
  });
}

extralab_status extralab_model_load(const char* checkpoint, extralab_model** out) {
  return guard([&] {
    require(checkpoint && out, "checkpoint and out must not be null");
    *out = nullptr;
    require_file(checkpoint, "checkpoint");
    auto m = std::make_unique<extralab_model>();
    try {
      m->model = Model::load(checkpoint);
    } catch (const std::runtime_error& e) {
      throw FormatError(e.what());
    }
    *out = m.release();
  });
}

void extralab_model_free(extralab_model* model) { delete model; }

extralab_status extralab_model_param_count(const extralab_model* model, size_t* out) {
  return guard([&] {
    require(model && out, "model and out must not be null");
    *out = model->model->param_count();
  });
}

extralab_status extralab_model_architecture(const extralab_model* model, const char** name) {
  return guard([&] {
    require(model && name, "model and name must not be null");
    *name = to_string(model->model->architecture());
  });
}

extralab_status extralab_model_predict(extralab_model* model, const char* input_text, char** prediction) {
  return guard([&] {
    require(model && input_text && prediction, "model, input_text and prediction must not be null");
    const auto& vocab = model->model->vocab();
    std::vector<TokenSeq> src{vocab.encode(input_text)};
    const auto out = model->model->decode(src, 32);
    set_out(prediction, render_prediction(out.front().tokens, vocab));
  });
}

extralab_status extralab_eval(const char* checkpoint, const char* dataset_jsonl, const char* out_dir,
                              const char* options_json, char** report_json) {
  return guard([&] {
    require(checkpoint && dataset_jsonl && out_dir, "checkpoint, dataset and out_dir must be given");
    const auto opts_json = parse_json_arg(options_json, "options");
    const auto opts = eval_options_from_json(opts_json);
    require_file(checkpoint, "checkpoint");
    require_file(dataset_jsonl, "dataset");
    IntRange square{500, 1500};
    const auto sidecar = fs::path(dataset_jsonl).parent_path() / "spec.json";
    if (opts_json.contains("train_square")) {
      square = range_from_json(opts_json["train_square"]);
    } else if (fs::is_regular_file(sidecar)) {
      const auto m = read_manifest(fs::path(dataset_jsonl).parent_path());
      if (m.contains("split_spec")) square = range_from_json(m["split_spec"].at("train_range"));
    }
    std::unique_ptr<Model> model;
    try {
      model = Model::load(checkpoint);
    } catch (const std::runtime_error& e) {
      throw FormatError(e.what());
    }
    const auto examples = read_dataset_jsonl(dataset_jsonl);
    log_info("evaluating " + std::to_string(examples.size()) + " examples");
    const auto rep = evaluate(*model, examples, opts);
    emit_plot_data(rep, out_dir, square);
    set_out(report_json, report_to_json(rep).dump(2));
  });
}

extralab_status extralab_report(const char* const* run_dirs, size_t n_runs, char** table_text) {
  return guard([&] {
    require(table_text != nullptr, "table_text must not be null");
    set_out(table_text, report(run_dirs, n_runs));
  });
}

extralab_status extralab_probe(const char* request_json, const char* out_dir, char** summary_json) {
  return guard([&] {
    require(out_dir && *out_dir, "out_dir must be given");
    const auto s = probe(parse_json_arg(request_json, "request"), out_dir);
    set_out(summary_json, s.dump(2));
  });
}

}  // extern "C"

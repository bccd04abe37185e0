// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/llmprobe.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "extralab/bigint.hpp"

namespace extralab {
namespace {

constexpr std::string_view kPrefix = "What is ";
constexpr std::string_view kSeparator = " + ";
constexpr std::string_view kSuffix = "?";

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Removes commas from a digit string when they form valid thousands groups
// ("1,234,567"); nullopt when the commas are placed any other way.
std::optional<std::string> strip_thousands(std::string_view digits) {
  if (digits.find(',') == std::string_view::npos) return std::string(digits);
  std::string out;
  std::size_t group = 0;
  bool first = true;
  std::size_t start = 0;
  while (true) {
    const auto comma = digits.find(',', start);
    const auto part = digits.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    group = part.size();
    if (!all_digits(part)) return std::nullopt;
    if (first ? (group < 1 || group > 3) : group != 3) return std::nullopt;
    out += part;
    first = false;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string canonical(std::string_view sign, std::string_view digits) {
  const auto nz = digits.find_first_not_of('0');
  if (nz == std::string_view::npos) return "0";
  return std::string(sign) + std::string(digits.substr(nz));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string ratio(std::size_t part, std::size_t whole) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", whole ? static_cast<double>(part) / static_cast<double>(whole) : 0.0);
  return buf;
}

std::size_t index_of(ResponseClass cls) { return static_cast<std::size_t>(cls); }

}  // namespace

const char* to_string(ResponseClass cls) {
  switch (cls) {
    case ResponseClass::non_numerical: return "non_numerical";
    case ResponseClass::numerical_incorrect: return "numerical_incorrect";
    case ResponseClass::correct: return "correct";
  }
  return "unknown";
}

Prompt make_prompt(std::size_t id, std::string_view a, std::string_view b) {
  const auto av = BigUInt::from_decimal(a);
  const auto bv = BigUInt::from_decimal(b);
  if (!av || !bv) throw std::invalid_argument("prompt operands must be decimal digit strings");
  Prompt p;
  p.id = id;
  p.a = std::string(a);
  p.b = std::string(b);
  p.text = std::string(kPrefix) + p.a + std::string(kSeparator) + p.b + std::string(kSuffix);
  p.truth = (*av + *bv).to_decimal();
  return p;
}

std::vector<Prompt> render_prompts(std::span<const LargeDigitPair> pairs) {
  std::vector<Prompt> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(make_prompt(i, pairs[i].a.to_decimal(), pairs[i].b.to_decimal()));
  }
  return out;
}

std::optional<std::pair<std::string, std::string>> parse_prompt(std::string_view text) {
  if (!text.starts_with(kPrefix) || !text.ends_with(kSuffix)) return std::nullopt;
  text.remove_prefix(kPrefix.size());
  text.remove_suffix(kSuffix.size());
  const auto sep = text.find(kSeparator);
  if (sep == std::string_view::npos) return std::nullopt;
  const auto a = text.substr(0, sep);
  const auto b = text.substr(sep + kSeparator.size());
  if (!all_digits(a) || !all_digits(b)) return std::nullopt;
  return std::pair{std::string(a), std::string(b)};
}

std::optional<std::string> normalize_numeric(std::string_view raw) {
  auto s = trim(raw);
  if (s.ends_with('.')) s.remove_suffix(1);
  std::string_view sign;
  if (s.starts_with('-')) {
    sign = "-";
    s.remove_prefix(1);
  }
  const auto digits = strip_thousands(s);
  if (!digits || !all_digits(*digits)) return std::nullopt;
  return canonical(sign, *digits);
}

Classification classify_response(std::string_view raw, std::string_view truth) {
  Classification c;
  c.parsed_value = normalize_numeric(raw);
  if (!c.parsed_value) {
    c.cls = ResponseClass::non_numerical;
    return c;
  }
  const bool truth_ok = all_digits(truth);
  const bool same = truth_ok && *c.parsed_value == canonical("", truth);
  c.cls = same ? ResponseClass::correct : ResponseClass::numerical_incorrect;
  return c;
}

void SamplingParams::validate() const {
  if (maximum_tokens < 1) throw std::invalid_argument("sampling: maximum_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("sampling: temperature must be >= 0");
  if (!(top_p >= 0.0 && top_p <= 1.0)) throw std::invalid_argument("sampling: top_p must lie in [0, 1]");
  if (top_k < 0) throw std::invalid_argument("sampling: top_k must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("sampling: n_samples must be >= 1");
}

nlohmann::json SamplingParams::to_json() const {
  return {{"maximum_tokens", maximum_tokens}, {"temperature", temperature}, {"top_p", top_p},
          {"top_k", top_k},                   {"n_samples", n_samples},     {"record_all_samples", record_all_samples}};
}

EndpointConfig endpoint_from_env() {
  const char* url = std::getenv(kEndpointEnv);
  if (!url || !*url) {
    throw std::runtime_error(std::string("live probing needs a completion endpoint: set ") + kEndpointEnv +
                             "=http[s]://host[:port]/path (and " + kTokenEnv +
                             " if the endpoint requires a bearer token), or pass --endpoint");
  }
  EndpointConfig cfg;
  cfg.url = url;
  if (const char* token = std::getenv(kTokenEnv)) cfg.token = token;
  if (const char* model = std::getenv(kModelEnv)) cfg.model = model;
  return cfg;
}

nlohmann::json completion_request_body(const std::string& prompt, const SamplingParams& params,
                                       const std::string& model) {
  nlohmann::ordered_json j;
  if (!model.empty()) j["model"] = model;
  j["prompt"] = prompt;
  j["max_tokens"] = params.maximum_tokens;
  j["temperature"] = params.temperature;
  j["top_p"] = params.top_p;
  j["top_k"] = params.top_k;
  j["n"] = params.n_samples;
  return nlohmann::json::parse(j.dump());
}

std::vector<std::string> parse_completion_body(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw CompletionError("completion response is not a JSON object", false);
  std::vector<std::string> out;
  if (j.contains("choices") && j["choices"].is_array()) {
    for (const auto& c : j["choices"]) {
      if (c.is_object() && c.contains("text") && c["text"].is_string()) out.push_back(c["text"].get<std::string>());
    }
  } else if (j.contains("completions") && j["completions"].is_array()) {
    for (const auto& c : j["completions"]) {
      if (c.is_string()) out.push_back(c.get<std::string>());
    }
  } else if (j.contains("text") && j["text"].is_string()) {
    out.push_back(j["text"].get<std::string>());
  }
  if (out.empty()) throw CompletionError("completion response carries no completion text", false);
  return out;
}

std::vector<ProbeResponse> probe_live(CompletionClient& client, std::span<const Prompt> prompts,
                                      const SamplingParams& params, const LiveOptions& options,
                                      const std::filesystem::path& raw_log) {
  params.validate();
  if (options.max_in_flight < 1) throw std::invalid_argument("probe: max_in_flight must be >= 1");
  if (options.retry.max_attempts < 1) throw std::invalid_argument("probe: max_attempts must be >= 1");
  std::ofstream log(raw_log, std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open " + raw_log.string() + " for writing");

  const auto sleep = options.sleep ? options.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::vector<FixtureRecord> raw(prompts.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;  // guards log, done, pacing
  std::size_t done = 0;
  auto next_slot = std::chrono::steady_clock::now();
  const auto interval = options.requests_per_second > 0.0
                            ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(1.0 / options.requests_per_second))
                            : std::chrono::steady_clock::duration::zero();

  auto pace = [&] {
    if (interval == std::chrono::steady_clock::duration::zero()) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard<std::mutex> lock(mu);
      slot = std::max(next_slot, std::chrono::steady_clock::now());
      next_slot = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      FixtureRecord rec;
      rec.prompt_id = prompts[i].id;
      rec.prompt = prompts[i].text;
      auto delay = options.retry.base_delay;
      for (int attempt = 1;; ++attempt) {
        try {
          pace();
          auto samples = client.complete(prompts[i].text, params);
          if (samples.empty()) throw CompletionError("endpoint returned no completions", false);
          rec.raw_completion = samples.front();
          if (params.record_all_samples) rec.extra_samples.assign(samples.begin() + 1, samples.end());
          break;
        } catch (const CompletionError& e) {
          if (!e.transient() || attempt >= options.retry.max_attempts) {
            rec.failed = true;
            rec.error = std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt" +
                        (attempt == 1 ? "" : "s") + ")";
            break;
          }
          sleep(delay);
          delay = std::min(options.retry.max_delay, delay * 2);
        }
      }
      std::lock_guard<std::mutex> lock(mu);
      log << fixture_line(rec) << '\n' << std::flush;
      raw[i] = std::move(rec);
      ++done;
      if (options.progress) options.progress(done, prompts.size());
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight), prompts.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  if (n_workers > 0) worker();
  for (auto& t : threads) t.join();
  if (!log) throw std::runtime_error("write failed: " + raw_log.string());
  return probe_replay(raw, prompts);
}

std::string fixture_line(const FixtureRecord& record) {
  nlohmann::ordered_json j;
  j["prompt_id"] = record.prompt_id;
  if (record.prompt) j["prompt"] = *record.prompt;
  j["raw_completion"] = record.raw_completion;
  if (!record.extra_samples.empty()) j["samples"] = record.extra_samples;
  if (record.failed) {
    j["failed"] = true;
    j["error"] = record.error;
  }
  return j.dump();
}

std::vector<FixtureRecord> read_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fixture " + path.string());
  std::vector<FixtureRecord> out;
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    return std::runtime_error("malformed fixture " + path.string() + " line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
    if (!j.contains("prompt_id") || !j["prompt_id"].is_number_unsigned()) throw bad("missing unsigned prompt_id");
    FixtureRecord r;
    r.prompt_id = j["prompt_id"].get<std::size_t>();
    r.failed = j.contains("failed") && j["failed"].is_boolean() && j["failed"].get<bool>();
    if (j.contains("raw_completion")) {
      if (!j["raw_completion"].is_string()) throw bad("raw_completion must be a string");
      r.raw_completion = j["raw_completion"].get<std::string>();
    } else if (!r.failed) {
      throw bad("missing raw_completion");
    }
    if (j.contains("prompt")) {
      if (!j["prompt"].is_string() || !parse_prompt(j["prompt"].get<std::string>())) throw bad("unparseable prompt");
      r.prompt = j["prompt"].get<std::string>();
    }
    if (j.contains("samples")) {
      if (!j["samples"].is_array()) throw bad("samples must be an array");
      for (const auto& s : j["samples"]) {
        if (!s.is_string()) throw bad("samples must hold strings");
        r.extra_samples.push_back(s.get<std::string>());
      }
    }
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ProbeResponse> probe_replay(std::span<const FixtureRecord> fixture, std::span<const Prompt> prompts,
                                        std::size_t limit) {
  std::map<std::size_t, const Prompt*> by_id;
  for (const auto& p : prompts) by_id[p.id] = &p;
  const std::size_t n = limit > 0 ? std::min(limit, fixture.size()) : fixture.size();
  std::vector<ProbeResponse> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = fixture[i];
    Prompt prompt;
    if (rec.prompt) {
      const auto ops = parse_prompt(*rec.prompt);
      if (!ops) throw std::runtime_error("fixture record " + std::to_string(rec.prompt_id) + " has an unparseable prompt");
      prompt = make_prompt(rec.prompt_id, ops->first, ops->second);
    } else {
      const auto it = by_id.find(rec.prompt_id);
      if (it == by_id.end()) {
        throw std::runtime_error("fixture record refers to unknown prompt_id " + std::to_string(rec.prompt_id));
      }
      prompt = *it->second;
    }
    ProbeResponse r;
    r.prompt_id = rec.prompt_id;
    r.prompt = prompt.text;
    r.a = prompt.a;
    r.b = prompt.b;
    r.truth = prompt.truth;
    r.raw_completion = rec.raw_completion;
    r.extra_samples = rec.extra_samples;
    r.failed = rec.failed;
    r.error = rec.error;
    if (!r.failed) r.classification = classify_response(r.raw_completion, r.truth);
    out.push_back(std::move(r));
  }
  return out;
}

int digit_bucket(std::string_view a, std::string_view b) {
  return static_cast<int>(std::max(a.size(), b.size()));
}

ProbeSummary summarize(std::span<const ProbeResponse> responses) {
  ProbeSummary s;
  for (const auto& r : responses) {
    if (r.failed) {
      ++s.n_failed;
      continue;
    }
    ++s.n_responses;
    const auto k = index_of(r.classification.cls);
    ++s.counts[k];
    auto& bucket = s.by_digits[digit_bucket(r.a, r.b)];
    ++bucket.n;
    ++bucket.counts[k];
    if (r.classification.parsed_value) {
      s.pred_vs_truth.push_back(
          {r.prompt_id, digit_bucket(r.a, r.b), r.truth, *r.classification.parsed_value, r.classification.cls});
    }
  }
  return s;
}

std::string summary_json(const ProbeSummary& summary, const SamplingParams& params) {
  nlohmann::ordered_json j;
  j["normalization"] = kNormalizationVersion;
  j["sampling"] = params.to_json();
  j["n_responses"] = summary.n_responses;
  j["n_failed"] = summary.n_failed;
  nlohmann::ordered_json counts;
  for (auto cls : {ResponseClass::non_numerical, ResponseClass::numerical_incorrect, ResponseClass::correct}) {
    counts[to_string(cls)] = summary.counts[index_of(cls)];
  }
  j["counts"] = counts;
  j["by_digits"] = nlohmann::ordered_json::array();
  for (const auto& [digits, b] : summary.by_digits) {
    nlohmann::ordered_json row;
    row["digits"] = digits;
    row["n"] = b.n;
    for (auto cls : {ResponseClass::non_numerical, ResponseClass::numerical_incorrect, ResponseClass::correct}) {
      row[to_string(cls)] = b.counts[index_of(cls)];
    }
    j["by_digits"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string ratio_by_digits_csv(const ProbeSummary& summary) {
  std::ostringstream out;
  out << "digits,n,non_numerical,numerical_incorrect,correct,non_numerical_ratio,numerical_incorrect_ratio,"
         "correct_ratio\n";
  for (const auto& [digits, b] : summary.by_digits) {
    const auto nn = b.counts[index_of(ResponseClass::non_numerical)];
    const auto ni = b.counts[index_of(ResponseClass::numerical_incorrect)];
    const auto ok = b.counts[index_of(ResponseClass::correct)];
    out << digits << ',' << b.n << ',' << nn << ',' << ni << ',' << ok << ',' << ratio(nn, b.n) << ','
        << ratio(ni, b.n) << ',' << ratio(ok, b.n) << '\n';
  }
  return out.str();
}

std::string pred_vs_truth_csv(const ProbeSummary& summary) {
  std::ostringstream out;
  out << "prompt_id,digits,truth,prediction,class\n";
  for (const auto& r : summary.pred_vs_truth) {
    out << r.prompt_id << ',' << r.digits << ',' << r.truth << ',' << r.prediction << ',' << to_string(r.cls) << '\n';
  }
  return out.str();
}

std::string response_line(const ProbeResponse& r) {
  nlohmann::ordered_json j;
  j["prompt_id"] = r.prompt_id;
  j["prompt"] = r.prompt;
  j["truth"] = r.truth;
  j["raw_completion"] = r.raw_completion;
  if (!r.extra_samples.empty()) j["samples"] = r.extra_samples;
  if (r.failed) {
    j["failed"] = true;
    j["error"] = r.error;
  } else {
    j["class"] = to_string(r.classification.cls);
    j["parsed_value"] = r.classification.parsed_value ? nlohmann::ordered_json(*r.classification.parsed_value)
                                                      : nlohmann::ordered_json();
  }
  return j.dump();
}

void write_probe_outputs(std::span<const ProbeResponse> responses, const ProbeSummary& summary,
                         const SamplingParams& params, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  std::string lines;
  for (const auto& r : responses) lines += response_line(r) + "\n";
  write_file(out_dir / "responses.jsonl", lines);
  write_file(out_dir / "summary.json", summary_json(summary, params));
  write_file(out_dir / "ratio_by_digits.csv", ratio_by_digits_csv(summary));
  write_file(out_dir / "pred_vs_truth.csv", pred_vs_truth_csv(summary));
}

}  // namespace extralab

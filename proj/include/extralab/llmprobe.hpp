// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extralab/taskgen.hpp"

namespace extralab {

struct Prompt {
  std::size_t id = 0;
  std::string text;  // "What is a + b?"
  std::string a;
  std::string b;
  std::string truth;  // a + b, decimal
};

std::vector<Prompt> render_prompts(std::span<const LargeDigitPair> pairs);
// Builds the prompt for one operand pair (decimal strings without signs).
Prompt make_prompt(std::size_t id, std::string_view a, std::string_view b);
// Inverse of the template; nullopt unless text is exactly "What is <a> + <b>?".
std::optional<std::pair<std::string, std::string>> parse_prompt(std::string_view text);

enum class ResponseClass { non_numerical, numerical_incorrect, correct };
const char* to_string(ResponseClass cls);

// Bumped whenever the normalization rules below change.
inline constexpr const char* kNormalizationVersion = "extralab-probe-normalize/1";

struct Classification {
  ResponseClass cls = ResponseClass::non_numerical;
  std::optional<std::string> parsed_value;  // canonical decimal, optional leading '-'
};

// Normalization: trim ASCII whitespace, strip one trailing '.', and drop
// commas that form valid thousands groups. The remainder is numeric iff it is
// an optional '-' followed by one or more ASCII digits; values are compared
// exactly as decimal strings, so operand size is unbounded.
Classification classify_response(std::string_view raw, std::string_view truth);
// The normalized numeric text, or nullopt when the response is non-numerical.
std::optional<std::string> normalize_numeric(std::string_view raw);

struct SamplingParams {
  int maximum_tokens = 105;
  double temperature = 0.1;
  double top_p = 0.0;
  int top_k = 0;
  int n_samples = 10;
  // Only the first sample is classified; all samples are still persisted
  // when this is set.
  bool record_all_samples = false;

  void validate() const;
  nlohmann::json to_json() const;
};

struct ProbeResponse {
  std::size_t prompt_id = 0;
  std::string prompt;
  std::string a;
  std::string b;
  std::string truth;
  std::string raw_completion;            // first sample, verbatim
  std::vector<std::string> extra_samples;  // samples 2..n when recorded
  bool failed = false;
  std::string error;
  Classification classification;
};

// Error raised by a completion client. Transient errors are retried.
class CompletionError : public std::runtime_error {
 public:
  CompletionError(const std::string& what, bool transient) : std::runtime_error(what), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  // Returns up to params.n_samples completions for the prompt, or throws
  // CompletionError.
  virtual std::vector<std::string> complete(const std::string& prompt, const SamplingParams& params) = 0;
};

struct EndpointConfig {
  std::string url;    // http[s]://host[:port]/path
  std::string token;  // sent as "Authorization: Bearer <token>" when non-empty
  std::string model;  // optional "model" field
  std::chrono::milliseconds timeout{60000};
};

inline constexpr const char* kEndpointEnv = "EXTRALAB_PROBE_ENDPOINT";
inline constexpr const char* kTokenEnv = "EXTRALAB_PROBE_TOKEN";
inline constexpr const char* kModelEnv = "EXTRALAB_PROBE_MODEL";

// Reads the endpoint from the environment; throws std::runtime_error with an
// actionable message when the endpoint variable is missing.
EndpointConfig endpoint_from_env();

// JSON body for one completion request.
nlohmann::json completion_request_body(const std::string& prompt, const SamplingParams& params,
                                       const std::string& model = {});
// Extracts completions from a response body: {"choices":[{"text":...}]},
// {"completions":[...]}, or {"text": ...}.
std::vector<std::string> parse_completion_body(const std::string& body);

// POSTs JSON to the endpoint. HTTP 408/429/5xx and connection failures are
// transient; other non-2xx statuses and malformed bodies are not.
std::unique_ptr<CompletionClient> make_http_client(const EndpointConfig& endpoint);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{8000};
};

struct LiveOptions {
  int max_in_flight = 4;
  double requests_per_second = 0.0;  // 0: unlimited
  RetryPolicy retry;
  // Overridable for tests.
  std::function<void(std::chrono::milliseconds)> sleep;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Queries every prompt. Each raw result is appended to raw_log (fixture
// format) as soon as it arrives, before any classification.
std::vector<ProbeResponse> probe_live(CompletionClient& client, std::span<const Prompt> prompts,
                                      const SamplingParams& params, const LiveOptions& options,
                                      const std::filesystem::path& raw_log);

struct FixtureRecord {
  std::size_t prompt_id = 0;
  std::optional<std::string> prompt;
  std::string raw_completion;
  std::vector<std::string> extra_samples;
  bool failed = false;
  std::string error;
};

// Line-delimited {prompt_id, raw_completion[, prompt][, samples][, failed, error]}.
// Throws std::runtime_error naming the line on malformed input.
std::vector<FixtureRecord> read_fixture(const std::filesystem::path& path);
std::string fixture_line(const FixtureRecord& record);

// Replays recorded completions. Records carrying prompt text are
// self-describing; others are matched to `prompts` by id. Only the first
// `limit` records are used when limit > 0.
std::vector<ProbeResponse> probe_replay(std::span<const FixtureRecord> fixture, std::span<const Prompt> prompts,
                                        std::size_t limit = 0);

struct DigitBucket {
  std::size_t n = 0;
  std::array<std::size_t, 3> counts{};  // indexed by ResponseClass
};

struct PredVsTruthRow {
  std::size_t prompt_id = 0;
  int digits = 0;
  std::string truth;
  std::string prediction;
  ResponseClass cls = ResponseClass::correct;
};

struct ProbeSummary {
  std::size_t n_responses = 0;
  std::size_t n_failed = 0;
  std::array<std::size_t, 3> counts{};  // indexed by ResponseClass
  std::map<int, DigitBucket> by_digits;  // bucket = max operand digit count
  std::vector<PredVsTruthRow> pred_vs_truth;
};

int digit_bucket(std::string_view a, std::string_view b);
ProbeSummary summarize(std::span<const ProbeResponse> responses);

std::string summary_json(const ProbeSummary& summary, const SamplingParams& params);
std::string ratio_by_digits_csv(const ProbeSummary& summary);
std::string pred_vs_truth_csv(const ProbeSummary& summary);
std::string response_line(const ProbeResponse& response);

// Writes responses.jsonl, summary.json, ratio_by_digits.csv, pred_vs_truth.csv.
void write_probe_outputs(std::span<const ProbeResponse> responses, const ProbeSummary& summary,
                         const SamplingParams& params, const std::filesystem::path& out_dir);

}  // namespace extralab

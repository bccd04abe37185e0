// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "extralab/bigint.hpp"
#include "extralab/models.hpp"
#include "extralab/taskgen.hpp"
#include "extralab/vocab.hpp"

namespace extralab {

struct PredictionRecord {
  BigUInt a;
  BigUInt b;
  BigUInt truth;
  std::string truth_text;
  TokenSeq pred_tokens;
  bool truncated = false;
  std::string pred_text;              // specials render as <PAD>/<BOS>/<EOS>
  std::optional<BigUInt> pred_value;  // absent unless pred_text is a numeral
  bool exact_match = false;
};

// Renders ids to text; specials become their bracketed names instead of
// throwing, so malformed predictions still have a printable form.
std::string render_prediction(const TokenSeq& pred, const Vocabulary& vocab);

// Character-for-character equality of the decoded prediction with the truth.
// A truncated decode (no EOS) never matches.
bool exact_match(const TokenSeq& pred, bool truncated, std::string_view truth_text, const Vocabulary& vocab);

PredictionRecord make_record(const EquationExample& ex, const DecodeResult& decoded, const Vocabulary& vocab);

enum class ErrorTag { correct, carry, truncation, other };
const char* to_string(ErrorTag tag);

struct ErrorClass {
  ErrorTag tag = ErrorTag::other;
  // carry: pred - truth = sum_i betas[i] * 10^(n-1-i), betas[i] in {-1,0,1},
  // most significant first.
  std::vector<int> betas;
  // truncation: truth = 10 * pred + beta.
  int truncation_digit = -1;
};

// Value-level classification. carry_digits is the length of the signed
// decomposition of the offset (4 covers the small-digit dataset). Carry wins
// when both carry and truncation patterns match.
ErrorClass classify_error(const BigUInt& pred, const BigUInt& truth, int carry_digits = 4);

// Record-level class: correct iff exact match; records without a numeric
// prediction, or whose value equals the truth but whose text does not, are
// `other`; everything else defers to classify_error.
ErrorClass classify_record(const PredictionRecord& record, int carry_digits = 4);

// The nonzero offsets representable as a carry pattern (3^n - 1 of them).
std::vector<std::int64_t> carry_offsets(int carry_digits = 4);

enum class Regime { interpolation, extrapolation };
const char* to_string(Regime regime);

struct MapPoint {
  BigUInt a;
  BigUInt b;
  bool correct = false;
  Regime regime = Regime::extrapolation;
};

// Interpolation iff both operands lie inside the (square) training range.
std::vector<MapPoint> extrapolation_map(std::span<const PredictionRecord> records, const IntRange& train_square);

struct ErrorCount {
  BigInt error;  // pred - truth
  std::size_t count = 0;
};

// Counts pred - truth over non-matching records that have a numeric
// prediction; ranks by count descending, then |error| ascending, then
// positive before negative.
std::vector<ErrorCount> top_errors(std::span<const PredictionRecord> records, std::size_t k = 100);

struct EvalOptions {
  std::size_t batch_size = 256;
  int max_len = 0;  // 0: longest answer in the split + 2
  int carry_digits = 4;
  std::size_t top_k = 100;
  IntRange answer_bounds{1000, 3000};
};

struct EvalReport {
  double em_percent = 0.0;
  std::vector<PredictionRecord> records;
  std::optional<BigUInt> answer_min;  // over numeric predictions
  std::optional<BigUInt> answer_max;
  double fraction_in_bounds = 0.0;  // numeric predictions inside answer_bounds, over all records
  IntRange answer_bounds{1000, 3000};
  std::vector<ErrorCount> top;
  std::map<std::string, std::size_t> taxonomy;  // ErrorTag name -> count
  int carry_digits = 4;
};

// EM% of an arbitrary set of records.
double em_percent(std::span<const PredictionRecord> records);

// Builds the report fields derived from records.
EvalReport summarize_records(std::vector<PredictionRecord> records, const EvalOptions& options = {});

// Greedy-decodes every example with the model and summarizes.
EvalReport evaluate(Model& model, std::span<const EquationExample> examples, const EvalOptions& options = {});

// Decode-only EM% (used per epoch for validation).
double evaluate_em(Model& model, std::span<const EquationExample> examples, const EvalOptions& options = {});

nlohmann::json report_to_json(const EvalReport& report);

// Writes scatter.csv, pred_vs_truth.csv, answer_hist.csv, top_errors.csv and
// report.json into out_dir. Throws std::runtime_error naming the path on I/O
// failure.
void emit_plot_data(const EvalReport& report, const std::filesystem::path& out_dir, const IntRange& train_square);

}  // namespace extralab

// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/eval.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace extralab {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

const char* to_string(ErrorTag tag) {
  switch (tag) {
    case ErrorTag::correct: return "correct";
    case ErrorTag::carry: return "carry";
    case ErrorTag::truncation: return "truncation";
    case ErrorTag::other: return "other";
  }
  return "unknown";
}

const char* to_string(Regime regime) {
  return regime == Regime::interpolation ? "interpolation" : "extrapolation";
}

std::string render_prediction(const TokenSeq& pred, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : pred.ids) out += vocab.contains(id) ? vocab.symbol_of(id) : "<UNK>";
  return out;
}

bool exact_match(const TokenSeq& pred, bool truncated, std::string_view truth_text, const Vocabulary& vocab) {
  if (truncated) return false;
  return render_prediction(pred, vocab) == truth_text;
}

PredictionRecord make_record(const EquationExample& ex, const DecodeResult& decoded, const Vocabulary& vocab) {
  PredictionRecord r;
  r.a = ex.a;
  r.b = ex.b;
  r.truth = ex.c;
  r.truth_text = ex.answer_text;
  r.pred_tokens = decoded.tokens;
  r.truncated = decoded.truncated;
  r.pred_text = render_prediction(decoded.tokens, vocab);
  r.pred_value = vocab.parse_number(r.pred_text);
  r.exact_match = exact_match(decoded.tokens, decoded.truncated, ex.answer_text, vocab);
  return r;
}

ErrorClass classify_error(const BigUInt& pred, const BigUInt& truth, int carry_digits) {
  if (carry_digits < 1 || carry_digits > 18) throw std::invalid_argument("carry_digits must lie in 1..18");
  ErrorClass out;
  if (pred == truth) {
    out.tag = ErrorTag::correct;
    return out;
  }
  const auto delta = BigInt::difference(pred, truth).to_i64();
  if (delta) {
    std::int64_t rest = *delta;
    std::vector<int> betas(static_cast<std::size_t>(carry_digits));
    bool ok = true;
    for (int i = carry_digits - 1; i >= 0 && ok; --i) {
      const std::int64_t r = ((rest % 10) + 10) % 10;
      int beta = 0;
      if (r == 1) beta = 1;
      else if (r == 9) beta = -1;
      else if (r != 0) ok = false;
      betas[static_cast<std::size_t>(i)] = beta;
      rest = (rest - beta) / 10;
    }
    if (ok && rest == 0) {
      out.tag = ErrorTag::carry;
      out.betas = std::move(betas);
      return out;
    }
  }
  BigUInt head = truth;
  const auto last = head.divmod_small(10);
  if (head == pred) {
    out.tag = ErrorTag::truncation;
    out.truncation_digit = static_cast<int>(last);
    return out;
  }
  out.tag = ErrorTag::other;
  return out;
}

ErrorClass classify_record(const PredictionRecord& record, int carry_digits) {
  if (record.exact_match) return ErrorClass{ErrorTag::correct, {}, -1};
  if (!record.pred_value || *record.pred_value == record.truth) return ErrorClass{ErrorTag::other, {}, -1};
  return classify_error(*record.pred_value, record.truth, carry_digits);
}

std::vector<std::int64_t> carry_offsets(int carry_digits) {
  std::vector<std::int64_t> out{0};
  for (int i = 0; i < carry_digits; ++i) {
    std::vector<std::int64_t> next;
    for (auto v : out) {
      for (int beta : {-1, 0, 1}) next.push_back(v * 10 + beta);
    }
    out = std::move(next);
  }
  out.erase(std::remove(out.begin(), out.end(), 0), out.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MapPoint> extrapolation_map(std::span<const PredictionRecord> records, const IntRange& train_square) {
  std::vector<MapPoint> out;
  out.reserve(records.size());
  const BigUInt lo(static_cast<std::uint64_t>(train_square.lo));
  const BigUInt hi(static_cast<std::uint64_t>(train_square.hi));
  for (const auto& r : records) {
    const bool inside = r.a >= lo && r.a <= hi && r.b >= lo && r.b <= hi;
    out.push_back({r.a, r.b, r.exact_match, inside ? Regime::interpolation : Regime::extrapolation});
  }
  return out;
}

std::vector<ErrorCount> top_errors(std::span<const PredictionRecord> records, std::size_t k) {
  if (k < 1) throw std::invalid_argument("top_errors: k must be >= 1");
  std::map<BigInt, std::size_t> counts;
  for (const auto& r : records) {
    if (r.exact_match || !r.pred_value) continue;
    ++counts[BigInt::difference(*r.pred_value, r.truth)];
  }
  std::vector<ErrorCount> out;
  out.reserve(counts.size());
  for (auto& [err, n] : counts) out.push_back({err, n});
  std::sort(out.begin(), out.end(), [](const ErrorCount& x, const ErrorCount& y) {
    if (x.count != y.count) return x.count > y.count;
    const auto mag = x.error.magnitude() <=> y.error.magnitude();
    if (mag != 0) return mag < 0;
    return !x.error.negative() && y.error.negative();
  });
  if (out.size() > k) out.resize(k);
  return out;
}

double em_percent(std::span<const PredictionRecord> records) {
  if (records.empty()) return 0.0;
  const auto hits = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.exact_match; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

EvalReport summarize_records(std::vector<PredictionRecord> records, const EvalOptions& options) {
  EvalReport rep;
  rep.carry_digits = options.carry_digits;
  rep.answer_bounds = options.answer_bounds;
  rep.em_percent = em_percent(records);
  for (auto tag : {ErrorTag::correct, ErrorTag::carry, ErrorTag::truncation, ErrorTag::other}) rep.taxonomy[to_string(tag)] = 0;
  const BigUInt lo(static_cast<std::uint64_t>(options.answer_bounds.lo));
  const BigUInt hi(static_cast<std::uint64_t>(options.answer_bounds.hi));
  std::size_t in_bounds = 0;
  for (const auto& r : records) {
    ++rep.taxonomy[to_string(classify_record(r, options.carry_digits).tag)];
    if (!r.pred_value) continue;
    const auto& v = *r.pred_value;
    if (!rep.answer_min || v < *rep.answer_min) rep.answer_min = v;
    if (!rep.answer_max || v > *rep.answer_max) rep.answer_max = v;
    if (v >= lo && v <= hi) ++in_bounds;
  }
  rep.fraction_in_bounds = records.empty() ? 0.0 : static_cast<double>(in_bounds) / static_cast<double>(records.size());
  rep.top = top_errors(records, options.top_k);
  rep.records = std::move(records);
  return rep;
}

namespace {

int resolve_max_len(std::span<const EquationExample> examples, const EvalOptions& options, const Vocabulary& vocab) {
  if (options.max_len > 0) return options.max_len;
  std::size_t longest = 0;
  for (const auto& ex : examples) longest = std::max(longest, vocab.encode(ex.answer_text).ids.size());
  return static_cast<int>(longest) + 2;
}

std::vector<PredictionRecord> predict_all(Model& model, std::span<const EquationExample> examples,
                                          const EvalOptions& options) {
  const auto& vocab = model.vocab();
  const int max_len = resolve_max_len(examples, options, vocab);
  std::vector<PredictionRecord> records;
  records.reserve(examples.size());
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t start = 0; start < examples.size(); start += bs) {
    const auto chunk = examples.subspan(start, std::min(bs, examples.size() - start));
    std::vector<TokenSeq> sources;
    sources.reserve(chunk.size());
    for (const auto& ex : chunk) sources.push_back(vocab.encode(ex.input_text));
    const auto decoded = model.decode(sources, max_len);
    for (std::size_t i = 0; i < chunk.size(); ++i) records.push_back(make_record(chunk[i], decoded[i], vocab));
  }
  return records;
}

}  // namespace

EvalReport evaluate(Model& model, std::span<const EquationExample> examples, const EvalOptions& options) {
  return summarize_records(predict_all(model, examples, options), options);
}

double evaluate_em(Model& model, std::span<const EquationExample> examples, const EvalOptions& options) {
  return em_percent(predict_all(model, examples, options));
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["n_records"] = report.records.size();
  j["em_percent"] = report.em_percent;
  j["answer_min"] = report.answer_min ? nlohmann::ordered_json(report.answer_min->to_decimal()) : nlohmann::ordered_json();
  j["answer_max"] = report.answer_max ? nlohmann::ordered_json(report.answer_max->to_decimal()) : nlohmann::ordered_json();
  j["answer_bounds"] = {report.answer_bounds.lo, report.answer_bounds.hi};
  j["fraction_in_bounds"] = report.fraction_in_bounds;
  j["carry_digits"] = report.carry_digits;
  nlohmann::ordered_json tax;
  for (auto tag : {ErrorTag::correct, ErrorTag::carry, ErrorTag::truncation, ErrorTag::other}) {
    auto it = report.taxonomy.find(to_string(tag));
    tax[to_string(tag)] = it == report.taxonomy.end() ? 0 : it->second;
  }
  j["taxonomy"] = tax;
  j["top_errors"] = nlohmann::ordered_json::array();
  for (const auto& e : report.top) j["top_errors"].push_back({{"error", e.error.to_decimal()}, {"count", e.count}});
  return nlohmann::json::parse(j.dump());
}

void emit_plot_data(const EvalReport& report, const std::filesystem::path& out_dir, const IntRange& train_square) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  {
    const auto path = out_dir / "scatter.csv";
    auto out = open_out(path);
    out << "a,b,correct,regime\n";
    for (const auto& p : extrapolation_map(report.records, train_square)) {
      out << p.a.to_decimal() << ',' << p.b.to_decimal() << ',' << (p.correct ? 1 : 0) << ',' << to_string(p.regime)
          << '\n';
    }
    check_written(out, path);
  }
  {
    const auto path = out_dir / "pred_vs_truth.csv";
    auto out = open_out(path);
    out << "a,b,truth,prediction,correct,error_class\n";
    for (const auto& r : report.records) {
      if (!r.pred_value) continue;
      out << r.a.to_decimal() << ',' << r.b.to_decimal() << ',' << r.truth.to_decimal() << ','
          << r.pred_value->to_decimal() << ',' << (r.exact_match ? 1 : 0) << ','
          << to_string(classify_record(r, report.carry_digits).tag) << '\n';
    }
    check_written(out, path);
  }
  {
    const auto path = out_dir / "answer_hist.csv";
    auto out = open_out(path);
    out << "value,truth_count,prediction_count\n";
    std::map<BigUInt, std::pair<std::size_t, std::size_t>> hist;
    for (const auto& r : report.records) {
      ++hist[r.truth].first;
      if (r.pred_value) ++hist[*r.pred_value].second;
    }
    for (const auto& [value, counts] : hist) {
      out << value.to_decimal() << ',' << counts.first << ',' << counts.second << '\n';
    }
    check_written(out, path);
  }
  {
    const auto path = out_dir / "top_errors.csv";
    auto out = open_out(path);
    out << "rank,error,count\n";
    for (std::size_t i = 0; i < report.top.size(); ++i) {
      out << i + 1 << ',' << report.top[i].error.to_decimal() << ',' << report.top[i].count << '\n';
    }
    check_written(out, path);
  }
  {
    const auto path = out_dir / "report.json";
    auto out = open_out(path);
    out << report_to_json(report).dump(2) << '\n';
    check_written(out, path);
  }
}

}  // namespace extralab

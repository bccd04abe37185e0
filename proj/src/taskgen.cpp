// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/taskgen.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "extralab/rng.hpp"

namespace extralab {
namespace {

// Stream ids keep each split on its own generator.
constexpr std::uint64_t kTrainValStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kLargeDigitStream = 3;
constexpr std::uint64_t kBinOpStream = 4;

std::int64_t mod_floor(std::int64_t v, std::int64_t m) {
  std::int64_t r = v % m;
  return r < 0 ? r + m : r;
}

std::int64_t pow_mod(std::int64_t base, int exp, std::int64_t m) {
  std::int64_t out = 1 % m;
  base = mod_floor(base, m);
  for (int i = 0; i < exp; ++i) out = static_cast<std::int64_t>((static_cast<__int128>(out) * base) % m);
  return out;
}

const char* to_string(Exclusion e) {
  return e == Exclusion::exclude_train_square ? "exclude_train_square" : "none";
}

}  // namespace

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

void SplitSpec::validate() const {
  if (train_range.lo < 0 || test_range.lo < 0) throw std::invalid_argument("split ranges must be non-negative");
  if (train_range.lo > train_range.hi || test_range.lo > test_range.hi) {
    throw std::invalid_argument("split range has lo > hi");
  }
  if (n_train == 0 || n_val == 0 || n_test == 0) throw std::invalid_argument("split counts must be positive");
  const double train_space = static_cast<double>(train_range.width()) * static_cast<double>(train_range.width());
  if (train_space < static_cast<double>(n_train + n_val)) {
    throw std::invalid_argument("train range too small for unique train+val pairs");
  }
  double test_space = static_cast<double>(test_range.width()) * static_cast<double>(test_range.width());
  if (exclusion == Exclusion::exclude_train_square) {
    if (train_range.lo < test_range.lo || train_range.hi > test_range.hi) {
      throw std::invalid_argument("train range must lie inside test range when excluding the train square");
    }
    test_space -= train_space;
  }
  if (test_space < static_cast<double>(n_test)) {
    throw std::invalid_argument("test region smaller than requested test count");
  }
}

SplitSpec small_digit_spec(std::uint64_t seed) {
  SplitSpec spec;
  spec.seed = seed;
  return spec;
}

SplitSpec larger_small_digit_spec(std::uint64_t seed) {
  SplitSpec spec;
  spec.train_range = {500, 2500};
  spec.test_range = {0, 5500};
  spec.seed = seed;
  return spec;
}

EquationExample make_addition_example(const BigUInt& a, const BigUInt& b, const Vocabulary& vocab) {
  EquationExample ex;
  ex.a = a;
  ex.b = b;
  ex.c = a + b;
  ex.input_text = vocab.render_number(a) + vocab.operator_symbol() + vocab.render_number(b) + "=";
  ex.answer_text = vocab.render_number(ex.c);
  return ex;
}

AdditionSplits gen_addition(const SplitSpec& spec, const Vocabulary& vocab) {
  if (vocab.task().kind == TaskKind::binop_table) {
    throw std::invalid_argument("gen_addition requires an addition vocabulary");
  }
  spec.validate();
  AdditionSplits out;
  out.train.split = Split::train;
  out.val.split = Split::val;
  out.test.split = Split::test;
  out.train.spec = out.val.spec = out.test.spec = spec;

  const auto& tr = spec.train_range;
  Rng train_rng(spec.seed, kTrainValStream);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2 * (spec.n_train + spec.n_val));
  const std::size_t unique_needed = spec.n_train + spec.n_val;
  out.train.examples.reserve(spec.n_train);
  out.val.examples.reserve(spec.n_val);
  while (seen.size() < unique_needed) {
    std::int64_t a = train_rng.uniform_int(tr.lo, tr.hi);
    std::int64_t b = train_rng.uniform_int(tr.lo, tr.hi);
    std::uint64_t key = static_cast<std::uint64_t>(a - tr.lo) * tr.width() + static_cast<std::uint64_t>(b - tr.lo);
    if (!seen.insert(key).second) continue;
    auto ex = make_addition_example(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b), vocab);
    (out.train.examples.size() < spec.n_train ? out.train : out.val).examples.push_back(std::move(ex));
  }

  const auto& te = spec.test_range;
  Rng test_rng(spec.seed, kTestStream);
  out.test.examples.reserve(spec.n_test);
  while (out.test.examples.size() < spec.n_test) {
    std::int64_t a = test_rng.uniform_int(te.lo, te.hi);
    std::int64_t b = test_rng.uniform_int(te.lo, te.hi);
    if (spec.exclusion == Exclusion::exclude_train_square && tr.contains(a) && tr.contains(b)) continue;
    out.test.examples.push_back(
        make_addition_example(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b), vocab));
  }
  return out;
}

AdditionSplits gen_small_digit(std::uint64_t seed) {
  return gen_addition(small_digit_spec(seed), Vocabulary::build({TaskKind::decimal_addition}));
}

AdditionSplits gen_larger_small_digit(std::uint64_t seed) {
  return gen_addition(larger_small_digit_spec(seed), Vocabulary::build({TaskKind::decimal_addition}));
}

AdditionSplits gen_nbase(int base, const SplitSpec& spec) {
  TaskSpec task{TaskKind::nbase_addition, base, 0};
  return gen_addition(spec, Vocabulary::build(task));
}

std::vector<LargeDigitPair> gen_large_digit_pairs(std::size_t n_pairs, int max_digits, std::uint64_t seed) {
  if (max_digits < 1) throw std::invalid_argument("max_digits must be >= 1");
  Rng rng(seed, kLargeDigitStream);
  auto draw = [&]() {
    const auto n_digits = rng.uniform_int(1, max_digits);
    std::string text;
    text.reserve(static_cast<std::size_t>(n_digits));
    text.push_back(static_cast<char>('0' + (n_digits == 1 ? rng.uniform_int(0, 9) : rng.uniform_int(1, 9))));
    for (std::int64_t i = 1; i < n_digits; ++i) text.push_back(static_cast<char>('0' + rng.uniform_int(0, 9)));
    return *BigUInt::from_decimal(text);
  };
  std::vector<LargeDigitPair> out;
  out.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    LargeDigitPair p;
    p.a = draw();
    p.b = draw();
    p.c = p.a + p.b;
    out.push_back(std::move(p));
  }
  return out;
}

std::int64_t apply_binop(const BinOpTableSpec& spec, std::int64_t a, std::int64_t b) {
  const std::int64_t p = spec.modulus;
  switch (spec.op) {
    case BinOpKind::add: return mod_floor(a + b, p);
    case BinOpKind::sub: return mod_floor(a - b, p);
    case BinOpKind::polynomial: {
      std::int64_t acc = 0;
      for (const auto& term : spec.terms) {
        __int128 t = mod_floor(term.coefficient, p);
        t = t * pow_mod(a, term.power_a, p) % p;
        t = t * pow_mod(b, term.power_b, p) % p;
        acc = mod_floor(acc + static_cast<std::int64_t>(t), p);
      }
      return acc;
    }
  }
  return 0;
}

BinOpSplits gen_binop_table(const BinOpTableSpec& spec) {
  if (spec.modulus < 2) throw std::invalid_argument("invalid modulus " + std::to_string(spec.modulus));
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  if (spec.op == BinOpKind::polynomial && spec.terms.empty()) {
    throw std::invalid_argument("polynomial operation needs at least one term");
  }
  const auto vocab = Vocabulary::build({TaskKind::binop_table, 0, spec.modulus});
  const std::int64_t p = spec.modulus;
  std::vector<EquationExample> rows;
  rows.reserve(static_cast<std::size_t>(p * p));
  for (std::int64_t a = 0; a < p; ++a) {
    for (std::int64_t b = 0; b < p; ++b) {
      EquationExample ex;
      ex.a = static_cast<std::uint64_t>(a);
      ex.b = static_cast<std::uint64_t>(b);
      ex.c = static_cast<std::uint64_t>(apply_binop(spec, a, b));
      ex.input_text = vocab.render_number(ex.a) + vocab.operator_symbol() + vocab.render_number(ex.b) + "=";
      ex.answer_text = vocab.render_number(ex.c);
      rows.push_back(std::move(ex));
    }
  }
  Rng rng(spec.seed, kBinOpStream);
  rng.shuffle(std::span<EquationExample>(rows));
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(rows.size())));
  BinOpSplits out;
  out.train.split = Split::train;
  out.test.split = Split::test;
  out.train.examples.assign(std::make_move_iterator(rows.begin()),
                            std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(n_train)));
  out.test.examples.assign(std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(n_train)),
                           std::make_move_iterator(rows.end()));
  return out;
}

std::string example_to_json_line(const EquationExample& ex) {
  nlohmann::ordered_json j;
  j["a"] = ex.a.to_decimal();
  j["b"] = ex.b.to_decimal();
  j["c"] = ex.c.to_decimal();
  j["input_text"] = ex.input_text;
  j["answer_text"] = ex.answer_text;
  return j.dump();
}

EquationExample example_from_json_line(std::string_view line) {
  auto j = nlohmann::json::parse(line);
  EquationExample ex;
  auto parse = [&](const char* key) {
    auto v = BigUInt::from_decimal(j.at(key).get<std::string>());
    if (!v) throw std::invalid_argument(std::string("dataset record: field '") + key + "' is not a decimal integer");
    return *v;
  };
  ex.a = parse("a");
  ex.b = parse("b");
  ex.c = parse("c");
  ex.input_text = j.at("input_text").get<std::string>();
  ex.answer_text = j.at("answer_text").get<std::string>();
  return ex;
}

void write_dataset_jsonl(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& ex : ds.examples) out << example_to_json_line(ex) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<EquationExample> read_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::vector<EquationExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string dataset_hash(const Dataset& ds) {
  std::string blob;
  for (const auto& ex : ds.examples) {
    blob += example_to_json_line(ex);
    blob += '\n';
  }
  return fnv1a_hex(blob);
}

std::string split_spec_to_json(const SplitSpec& spec) {
  nlohmann::ordered_json j;
  j["train_range"] = {spec.train_range.lo, spec.train_range.hi};
  j["test_range"] = {spec.test_range.lo, spec.test_range.hi};
  j["n_train"] = spec.n_train;
  j["n_val"] = spec.n_val;
  j["n_test"] = spec.n_test;
  j["seed"] = spec.seed;
  j["exclusion"] = to_string(spec.exclusion);
  return j.dump();
}

SplitSpec split_spec_from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text);
  SplitSpec spec;
  auto tr = j.at("train_range").get<std::vector<std::int64_t>>();
  auto te = j.at("test_range").get<std::vector<std::int64_t>>();
  if (tr.size() != 2 || te.size() != 2) throw std::invalid_argument("split spec: ranges need two bounds");
  spec.train_range = {tr[0], tr[1]};
  spec.test_range = {te[0], te[1]};
  spec.n_train = j.at("n_train").get<std::size_t>();
  spec.n_val = j.at("n_val").get<std::size_t>();
  spec.n_test = j.at("n_test").get<std::size_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  auto excl = j.value("exclusion", std::string("exclude_train_square"));
  if (excl == "none") {
    spec.exclusion = Exclusion::none;
  } else if (excl == "exclude_train_square") {
    spec.exclusion = Exclusion::exclude_train_square;
  } else {
    throw std::invalid_argument("split spec: unknown exclusion '" + excl + "'");
  }
  return spec;
}

}  // namespace extralab

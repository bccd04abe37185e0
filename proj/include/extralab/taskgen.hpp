// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "extralab/bigint.hpp"
#include "extralab/vocab.hpp"

namespace extralab {

inline constexpr const char* kGeneratorVersion = "extralab-taskgen/1";

struct EquationExample {
  BigUInt a;
  BigUInt b;
  BigUInt c;
  std::string input_text;   // "a+b=" in the task vocabulary
  std::string answer_text;  // c
};

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
  std::uint64_t width() const { return static_cast<std::uint64_t>(hi - lo) + 1; }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

enum class Exclusion { none, exclude_train_square };

struct SplitSpec {
  IntRange train_range{500, 1500};
  IntRange test_range{0, 2500};
  std::size_t n_train = 40000;
  std::size_t n_val = 5000;
  std::size_t n_test = 50000;
  std::uint64_t seed = 0;
  Exclusion exclusion = Exclusion::exclude_train_square;

  // Throws std::invalid_argument when counts are zero, ranges inverted,
  // containment fails, or a sample space is smaller than its request.
  void validate() const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

enum class Split { train, val, test };
const char* to_string(Split split);

struct Dataset {
  Split split = Split::train;
  std::vector<EquationExample> examples;
  SplitSpec spec;
};

struct AdditionSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Small-digit dataset: 40k/5k unique pairs in [500,1500]^2, 50k test pairs in
// [0,2500]^2 outside the training square.
AdditionSplits gen_small_digit(std::uint64_t seed);
// Train square [500,2500]^2, test range [0,5500], same counts.
AdditionSplits gen_larger_small_digit(std::uint64_t seed);
// Range-based splits with operands rendered in `vocab`'s numerals.
AdditionSplits gen_addition(const SplitSpec& spec, const Vocabulary& vocab);
AdditionSplits gen_nbase(int base, const SplitSpec& spec);

SplitSpec small_digit_spec(std::uint64_t seed);
SplitSpec larger_small_digit_spec(std::uint64_t seed);

struct LargeDigitPair {
  BigUInt a;
  BigUInt b;
  BigUInt c;
};

// Operand digit counts are uniform on 1..max_digits; multi-digit operands
// have a nonzero leading digit, so 0 occurs only as a 1-digit operand.
std::vector<LargeDigitPair> gen_large_digit_pairs(std::size_t n_pairs = 100000,
                                                  int max_digits = 100,
                                                  std::uint64_t seed = 0);

struct PolynomialTerm {
  std::int64_t coefficient = 1;
  int power_a = 0;
  int power_b = 0;
};

enum class BinOpKind { add, sub, polynomial };

struct BinOpTableSpec {
  int modulus = 97;
  BinOpKind op = BinOpKind::add;
  std::vector<PolynomialTerm> terms;  // polynomial only
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct BinOpSplits {
  Dataset train;
  Dataset test;
};

// All p^2 rows, shuffled by seed; train takes floor(train_fraction * p^2).
BinOpSplits gen_binop_table(const BinOpTableSpec& spec);
std::int64_t apply_binop(const BinOpTableSpec& spec, std::int64_t a, std::int64_t b);

EquationExample make_addition_example(const BigUInt& a, const BigUInt& b, const Vocabulary& vocab);

// Persistence: one JSON object per line (a, b, c as decimal strings plus the
// rendered texts).
std::string example_to_json_line(const EquationExample& ex);
EquationExample example_from_json_line(std::string_view line);
void write_dataset_jsonl(const Dataset& ds, const std::filesystem::path& path);
std::vector<EquationExample> read_dataset_jsonl(const std::filesystem::path& path);
// FNV-1a of the serialized records.
std::string dataset_hash(const Dataset& ds);

std::string split_spec_to_json(const SplitSpec& spec);
SplitSpec split_spec_from_json(std::string_view json);

}  // namespace extralab

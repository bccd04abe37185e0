// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>
#include <set>
#include <utility>

#include "extralab/taskgen.hpp"
#include "extralab/vocab.hpp"

using namespace extralab;

namespace {

std::int64_t as_int(const BigUInt& x) { return static_cast<std::int64_t>(*x.to_u64()); }

}  // namespace

TEST_CASE("small-digit splits: sizes, ranges, exclusion, uniqueness") {
  const auto s = gen_small_digit(2023);
  CHECK(s.train.examples.size() == 40000);
  CHECK(s.val.examples.size() == 5000);
  CHECK(s.test.examples.size() == 50000);

  std::set<std::pair<std::int64_t, std::int64_t>> train_val;
  for (const auto* ds : {&s.train, &s.val}) {
    for (const auto& ex : ds->examples) {
      const auto a = as_int(ex.a), b = as_int(ex.b);
      CHECK((a >= 500 && a <= 1500 && b >= 500 && b <= 1500));
      CHECK(train_val.emplace(a, b).second);  // unique across train and val
      REQUIRE(as_int(ex.c) == a + b);
      REQUIRE(ex.input_text == std::to_string(a) + "+" + std::to_string(b) + "=");
      REQUIRE(ex.answer_text == std::to_string(a + b));
    }
  }
  std::int64_t in_square = 0;
  for (const auto& ex : s.test.examples) {
    const auto a = as_int(ex.a), b = as_int(ex.b);
    CHECK((a >= 0 && a <= 2500 && b >= 0 && b <= 2500));
    if (a >= 500 && a <= 1500 && b >= 500 && b <= 1500) ++in_square;
    REQUIRE(as_int(ex.c) == a + b);
  }
  CHECK(in_square == 0);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto x = gen_small_digit(7);
  const auto y = gen_small_digit(7);
  const auto z = gen_small_digit(8);
  CHECK(dataset_hash(x.train) == dataset_hash(y.train));
  CHECK(dataset_hash(x.val) == dataset_hash(y.val));
  CHECK(dataset_hash(x.test) == dataset_hash(y.test));
  CHECK(dataset_hash(x.train) != dataset_hash(z.train));
}

TEST_CASE("larger small-digit task draws from its own ranges") {
  const auto spec = larger_small_digit_spec(1);
  const auto s = gen_larger_small_digit(1);
  for (const auto& ex : s.train.examples) {
    CHECK(spec.train_range.contains(as_int(ex.a)));
    CHECK(spec.train_range.contains(as_int(ex.b)));
  }
  for (const auto& ex : s.test.examples) {
    const bool both = spec.train_range.contains(as_int(ex.a)) && spec.train_range.contains(as_int(ex.b));
    CHECK(!both);
  }
}

TEST_CASE("n-base addition renders operands in the base") {
  SplitSpec spec;
  spec.train_range = {0, 200};
  spec.test_range = {0, 400};
  spec.n_train = 500;
  spec.n_val = 50;
  spec.n_test = 300;
  spec.seed = 3;
  const auto s = gen_nbase(7, spec);
  for (const auto& ex : s.train.examples) {
    CHECK(ex.input_text == ex.a.to_base(7) + "+" + ex.b.to_base(7) + "=");
    CHECK(ex.answer_text == ex.c.to_base(7));
    CHECK(as_int(ex.c) == as_int(ex.a) + as_int(ex.b));
  }
  CHECK_THROWS_AS(gen_nbase(1, spec), std::invalid_argument);
}

TEST_CASE("invalid split specs are rejected") {
  SplitSpec spec;
  spec.train_range = {0, 9};
  spec.n_train = 90;
  spec.n_val = 20;  // only 100 distinct pairs exist
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("binop tables cover every pair and split by the train fraction") {
  BinOpTableSpec spec;
  spec.modulus = 11;
  spec.op = BinOpKind::sub;
  spec.train_fraction = 0.5;
  spec.seed = 4;
  const auto s = gen_binop_table(spec);
  CHECK(s.train.examples.size() == 60);
  CHECK(s.test.examples.size() == 61);
  std::set<std::pair<std::int64_t, std::int64_t>> all;
  for (const auto* ds : {&s.train, &s.test}) {
    for (const auto& ex : ds->examples) {
      const auto a = as_int(ex.a), b = as_int(ex.b);
      all.emplace(a, b);
      CHECK(as_int(ex.c) == ((a - b) % 11 + 11) % 11);
    }
  }
  CHECK(all.size() == 121);

  spec.op = BinOpKind::polynomial;
  spec.terms = {{1, 2, 0}, {1, 1, 1}, {1, 0, 2}};  // a^2 + ab + b^2
  for (std::int64_t a = 0; a < 11; ++a)
    for (std::int64_t b = 0; b < 11; ++b) CHECK(apply_binop(spec, a, b) == (a * a + a * b + b * b) % 11);
}

TEST_CASE("large-digit pairs respect the digit bound and add correctly") {
  const auto pairs = gen_large_digit_pairs(500, 100, 9);
  CHECK(pairs.size() == 500);
  std::size_t longest = 0;
  for (const auto& p : pairs) {
    CHECK(p.a.decimal_digits() <= 100);
    CHECK(p.b.decimal_digits() <= 100);
    CHECK(p.a + p.b == p.c);
    longest = std::max(longest, p.a.decimal_digits());
  }
  CHECK(longest > 50);
  CHECK(gen_large_digit_pairs(20, 100, 9)[5].a == pairs[5].a);  // prefix-stable
}

TEST_CASE("JSONL datasets round-trip") {
  const auto s = gen_small_digit(5);
  const auto path = std::filesystem::temp_directory_path() / "extralab_taskgen_roundtrip.jsonl";
  write_dataset_jsonl(s.val, path);
  const auto back = read_dataset_jsonl(path);
  REQUIRE(back.size() == s.val.examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].input_text == s.val.examples[i].input_text);
    CHECK(back[i].c == s.val.examples[i].c);
  }
  std::filesystem::remove(path);
  CHECK(split_spec_from_json(split_spec_to_json(s.val.spec)) == s.val.spec);
}

TEST_CASE("larger small-digit training square is [500, 2500] and the test split excludes it") {
  const auto spec = larger_small_digit_spec(2);
  CHECK(spec.train_range.lo == 500);
  CHECK(spec.train_range.hi == 2500);
  const auto s = gen_larger_small_digit(2);
  for (const auto* ds : {&s.train, &s.val}) {
    for (const auto& ex : ds->examples) {
      const auto a = as_int(ex.a), b = as_int(ex.b);
      CHECK((a >= 500 && a <= 2500 && b >= 500 && b <= 2500));
    }
  }
  std::size_t inside = 0;
  for (const auto& ex : s.test.examples) {
    const auto a = as_int(ex.a), b = as_int(ex.b);
    inside += a >= 500 && a <= 2500 && b >= 500 && b <= 2500;
  }
  CHECK(inside == 0);
}

TEST_CASE("large-digit defaults: 100,000 pairs with uniform operand lengths") {
  const auto pairs = gen_large_digit_pairs();
  REQUIRE(pairs.size() == 100000);
  // Chi-square goodness of fit of operand digit counts against uniform 1..100.
  std::vector<double> hist(101, 0.0);
  for (const auto& p : pairs) {
    hist[p.a.decimal_digits()] += 1;
    hist[p.b.decimal_digits()] += 1;
  }
  const double expected = 2.0 * static_cast<double>(pairs.size()) / 100.0;
  double chi2 = 0;
  for (int d = 1; d <= 100; ++d) chi2 += (hist[d] - expected) * (hist[d] - expected) / expected;
  CHECK(hist[0] == 0.0);
  // Upper 0.001 critical value of chi-square with 99 degrees of freedom.
  CHECK(chi2 < 148.23);
}

TEST_CASE("base-16 datasets use only the 16 hexadecimal numerals") {
  SplitSpec spec;
  spec.train_range = {0, 4095};
  spec.test_range = {0, 8191};
  spec.n_train = 400;
  spec.n_val = 40;
  spec.n_test = 200;
  spec.seed = 6;
  const auto s = gen_nbase(16, spec);
  const std::string alphabet = "0123456789abcdef";
  for (const auto* ds : {&s.train, &s.val, &s.test}) {
    for (const auto& ex : ds->examples) {
      for (char ch : ex.answer_text) CHECK(alphabet.find(ch) != std::string::npos);
      // Independent parse of the hexadecimal answer.
      CHECK(static_cast<std::int64_t>(std::stoll(ex.answer_text, nullptr, 16)) == as_int(ex.a) + as_int(ex.b));
    }
  }
}

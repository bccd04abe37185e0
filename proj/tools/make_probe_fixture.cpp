// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Writes a deterministic synthetic probe fixture: self-describing records
// whose completions fall into the three response classes in the requested
// proportions. Every completion is checked against the classifier before it
// is written.
//
//   make_probe_fixture OUT.jsonl [N=1000] [SEED=2023] [NON_NUMERICAL=665]
//                      [NUMERICAL_INCORRECT=328] [CORRECT=7]

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "extralab/llmprobe.hpp"
#include "extralab/rng.hpp"

namespace {

using namespace extralab;

std::string with_commas(const std::string& digits) {
  std::string out;
  const auto n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string change_digit(std::string s, Rng& rng) {
  const auto i = rng.below(s.size());
  const char old = s[i];
  char repl = old;
  while (repl == old || (i == 0 && repl == '0' && s.size() > 1)) repl = static_cast<char>('0' + rng.below(10));
  s[i] = repl;
  return s;
}

std::string non_numerical(const Prompt& p, Rng& rng) {
  switch (rng.below(8)) {
    case 0: return "The answer is " + p.truth + ".";
    case 1: return " " + p.a + " + " + p.b + " = " + p.truth;
    case 2: return "\n\nWhat is " + p.a + " + " + p.b + "?\n\nWhat is";
    case 3: return p.truth + "\n\nWhat is " + p.b + " + " + p.a + "?";
    case 4: return "I don't know.";
    case 5: return change_digit(p.truth, rng) + "?";
    case 6: return p.truth.size() > 1 ? p.truth.substr(0, 1) + ",," + p.truth.substr(1) : "x" + p.truth;
    default: return " " + p.truth + " (approximately)";
  }
}

std::string numerical_incorrect(const Prompt& p, Rng& rng) {
  switch (rng.below(5)) {
    case 0: return change_digit(p.truth, rng);
    case 1: return p.truth.size() > 1 ? p.truth.substr(0, p.truth.size() - 1) : p.truth + "1";
    case 2: return " " + p.truth + std::to_string(rng.below(10)) + ".";
    case 3: return with_commas(change_digit(p.truth, rng));
    default: return p.truth == "0" ? "1" : "-" + p.truth;
  }
}

std::string correct(const Prompt& p, Rng& rng) {
  switch (rng.below(4)) {
    case 0: return p.truth;
    case 1: return " " + p.truth + ".";
    case 2: return with_commas(p.truth);
    default: return "\n" + p.truth + "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s OUT.jsonl [N] [SEED] [NON_NUMERICAL] [NUMERICAL_INCORRECT] [CORRECT]\n", argv[0]);
    return 2;
  }
  auto arg = [&](int i, std::uint64_t fallback) { return argc > i ? std::strtoull(argv[i], nullptr, 10) : fallback; };
  const auto n = arg(2, 1000);
  const auto seed = arg(3, 2023);
  const std::size_t counts[3] = {arg(4, 665), arg(5, 328), arg(6, 7)};
  if (counts[0] + counts[1] + counts[2] != n) {
    std::fprintf(stderr, "class counts must sum to N\n");
    return 2;
  }
  const auto prompts = render_prompts(gen_large_digit_pairs(n, 100, seed));
  std::vector<ResponseClass> classes;
  for (int k = 0; k < 3; ++k) classes.insert(classes.end(), counts[k], static_cast<ResponseClass>(k));
  Rng rng(seed, /*stream=*/0x66697874);
  rng.shuffle(std::span<ResponseClass>(classes));

  std::ofstream out(argv[1], std::ios::binary | std::ios::trunc);
  if (!out) {
    std::fprintf(stderr, "cannot open %s\n", argv[1]);
    return 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = prompts[i];
    FixtureRecord rec;
    rec.prompt_id = p.id;
    rec.prompt = p.text;
    switch (classes[i]) {
      case ResponseClass::non_numerical: rec.raw_completion = non_numerical(p, rng); break;
      case ResponseClass::numerical_incorrect: rec.raw_completion = numerical_incorrect(p, rng); break;
      case ResponseClass::correct: rec.raw_completion = correct(p, rng); break;
    }
    const auto got = classify_response(rec.raw_completion, p.truth).cls;
    if (got != classes[i]) {
      std::fprintf(stderr, "record %zu: intended %s, classified %s\n", i, to_string(classes[i]), to_string(got));
      return 1;
    }
    out << fixture_line(rec) << '\n';
  }
  return out ? 0 : 1;
}

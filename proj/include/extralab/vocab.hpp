// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "extralab/bigint.hpp"

namespace extralab {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kFirstTaskId = 3;

enum class TaskKind { decimal_addition, nbase_addition, binop_table };

const char* to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::decimal_addition;
  int base = 10;     // nbase_addition
  int modulus = 0;   // binop_table
};

class TokenizeError : public std::invalid_argument {
 public:
  TokenizeError(std::size_t position, std::string symbol)
      : std::invalid_argument("unknown symbol '" + symbol + "' at position " +
                              std::to_string(position)),
        position_(position),
        symbol_(std::move(symbol)) {}
  std::size_t position() const { return position_; }
  const std::string& symbol() const { return symbol_; }

 private:
  std::size_t position_;
  std::string symbol_;
};

// A token sequence owned by some Vocabulary. Holds ids only; specials are
// added by callers.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::size_t length() const { return ids.size(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Bijective symbol <-> id map. Ids 0..2 are PAD/BOS/EOS; task symbols occupy
// ids 3.. in task_symbols order. For addition tasks the first `base` task
// symbols are the numerals in value order (symbol_for_value(v) ==
// task_symbols[v]); the last two are the operator and "=".
class Vocabulary {
 public:
  static Vocabulary build(const TaskSpec& task);

  const TaskSpec& task() const { return task_; }
  const std::vector<std::string>& task_symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size() + 3; }
  // Number of symbols with a numeric value (digits or residues).
  int radix() const { return radix_; }

  std::optional<TokenId> id_of(std::string_view symbol) const;
  // Throws std::out_of_range for undefined ids.
  const std::string& symbol_of(TokenId id) const;
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  TokenId digit_id(int value) const { return kFirstTaskId + value; }
  // Numeric value of a digit/residue token, if it is one.
  std::optional<int> value_of(TokenId id) const;
  TokenId operator_id() const { return kFirstTaskId + radix_; }
  TokenId equals_id() const { return kFirstTaskId + radix_ + 1; }
  const std::string& operator_symbol() const { return symbols_[radix_]; }

  // Longest-match tokenization of `text`. No specials are added.
  TokenSeq encode(std::string_view text) const;
  // Concatenates symbols; specials are rejected with std::invalid_argument.
  std::string decode(const TokenSeq& seq) const;

  // Renders an operand or result in this vocabulary's numerals.
  std::string render_number(const BigUInt& value) const;
  // Inverse of render_number. Leading zeros are accepted.
  std::optional<BigUInt> parse_number(std::string_view text) const;

  // Addition vocabularies only: numeral v becomes the symbol previously at
  // position perm[v], with perm a seeded shuffle of 0..base-1.
  Vocabulary permute_digits(std::uint64_t seed) const;
  // Applies an explicit numeral permutation (used to invert permute_digits).
  Vocabulary with_digit_order(const std::vector<int>& perm) const;
  const std::vector<int>& digit_permutation() const { return permutation_; }

  std::string to_json() const;
  static Vocabulary from_json(std::string_view json);
  // FNV-1a over to_json(); identifies vocabularies in checkpoints.
  std::string hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.symbols_ == b.symbols_ && a.radix_ == b.radix_ &&
           a.task_.kind == b.task_.kind;
  }

 private:
  Vocabulary(TaskSpec task, std::vector<std::string> symbols, int radix);
  void index();

  TaskSpec task_;
  std::vector<std::string> symbols_;
  int radix_ = 0;
  std::vector<int> permutation_;  // identity unless permuted
  std::unordered_map<std::string, TokenId> ids_;
  std::size_t max_symbol_bytes_ = 1;
};

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace extralab

// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/vocab.hpp"

#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "extralab/rng.hpp"

namespace extralab {
namespace {

constexpr const char* kComposeSymbol = "\xe2\x88\x98";  // U+2218 RING OPERATOR

std::string numeral_symbol(int value) {
  return std::string(1, static_cast<char>(value < 10 ? '0' + value : 'a' + value - 10));
}

}  // namespace

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::decimal_addition: return "decimal_addition";
    case TaskKind::nbase_addition: return "nbase_addition";
    case TaskKind::binop_table: return "binop_table";
  }
  return "unknown";
}

std::optional<TaskKind> task_kind_from_string(std::string_view name) {
  if (name == "decimal_addition") return TaskKind::decimal_addition;
  if (name == "nbase_addition") return TaskKind::nbase_addition;
  if (name == "binop_table") return TaskKind::binop_table;
  return std::nullopt;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Vocabulary::Vocabulary(TaskSpec task, std::vector<std::string> symbols, int radix)
    : task_(task), symbols_(std::move(symbols)), radix_(radix) {
  permutation_.resize(static_cast<std::size_t>(radix_));
  std::iota(permutation_.begin(), permutation_.end(), 0);
  index();
}

void Vocabulary::index() {
  ids_.clear();
  max_symbol_bytes_ = 1;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    ids_.emplace(symbols_[i], static_cast<TokenId>(kFirstTaskId + i));
    max_symbol_bytes_ = std::max(max_symbol_bytes_, symbols_[i].size());
  }
}

Vocabulary Vocabulary::build(const TaskSpec& task) {
  std::vector<std::string> symbols;
  int radix = 0;
  std::string op = "+";
  switch (task.kind) {
    case TaskKind::decimal_addition:
      radix = 10;
      break;
    case TaskKind::nbase_addition:
      if (task.base < 2 || task.base > 36) {
        throw std::invalid_argument("invalid base " + std::to_string(task.base) +
                                    ": expected 2..36");
      }
      radix = task.base;
      break;
    case TaskKind::binop_table:
      if (task.modulus < 2) {
        throw std::invalid_argument("invalid modulus " + std::to_string(task.modulus) +
                                    ": expected >= 2");
      }
      radix = task.modulus;
      op = kComposeSymbol;
      break;
  }
  for (int v = 0; v < radix; ++v) {
    symbols.push_back(task.kind == TaskKind::binop_table ? std::to_string(v) : numeral_symbol(v));
  }
  symbols.push_back(op);
  symbols.push_back("=");
  TaskSpec normalized = task;
  if (task.kind == TaskKind::decimal_addition) normalized.base = 10;
  if (task.kind != TaskKind::binop_table) normalized.modulus = 0;
  return Vocabulary(normalized, std::move(symbols), radix);
}

std::optional<TokenId> Vocabulary::id_of(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::symbol_of(TokenId id) const {
  static const std::string kSpecials[] = {"<PAD>", "<BOS>", "<EOS>"};
  if (id >= 0 && id < kFirstTaskId) return kSpecials[id];
  if (!contains(id)) throw std::out_of_range("token id " + std::to_string(id) + " not in vocabulary");
  return symbols_[static_cast<std::size_t>(id - kFirstTaskId)];
}

std::optional<int> Vocabulary::value_of(TokenId id) const {
  if (id >= kFirstTaskId && id < kFirstTaskId + radix_) return id - kFirstTaskId;
  return std::nullopt;
}

TokenSeq Vocabulary::encode(std::string_view text) const {
  TokenSeq out;
  out.ids.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = std::min(max_symbol_bytes_, text.size() - pos);
    bool matched = false;
    for (; len > 0; --len) {
      auto it = ids_.find(std::string(text.substr(pos, len)));
      if (it != ids_.end()) {
        out.ids.push_back(it->second);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) throw TokenizeError(pos, std::string(1, text[pos]));
  }
  return out;
}

std::string Vocabulary::decode(const TokenSeq& seq) const {
  std::string out;
  for (TokenId id : seq.ids) {
    if (id < kFirstTaskId) {
      throw std::invalid_argument("decode: special token " + symbol_of(id) + " in sequence");
    }
    out += symbol_of(id);
  }
  return out;
}

std::string Vocabulary::render_number(const BigUInt& value) const {
  if (task_.kind == TaskKind::binop_table) {
    auto v = value.to_u64();
    if (!v || *v >= static_cast<std::uint64_t>(radix_)) {
      throw std::invalid_argument("residue " + value.to_decimal() + " out of range");
    }
    return symbols_[*v];
  }
  std::string out;
  for (int d : value.digits(radix_)) out += symbols_[static_cast<std::size_t>(d)];
  return out;
}

std::optional<BigUInt> Vocabulary::parse_number(std::string_view text) const {
  TokenSeq seq;
  try {
    seq = encode(text);
  } catch (const TokenizeError&) {
    return std::nullopt;
  }
  if (seq.ids.empty()) return std::nullopt;
  if (task_.kind == TaskKind::binop_table && seq.ids.size() != 1) return std::nullopt;
  BigUInt out;
  for (TokenId id : seq.ids) {
    auto v = value_of(id);
    if (!v) return std::nullopt;
    out.mul_add_small(static_cast<std::uint32_t>(radix_), static_cast<std::uint32_t>(*v));
  }
  return out;
}

Vocabulary Vocabulary::with_digit_order(const std::vector<int>& perm) const {
  if (task_.kind == TaskKind::binop_table) {
    throw std::invalid_argument("digit permutation requires an addition vocabulary");
  }
  if (perm.size() != static_cast<std::size_t>(radix_)) {
    throw std::invalid_argument("digit permutation has wrong length");
  }
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= radix_ || seen[static_cast<std::size_t>(p)]) {
      throw std::invalid_argument("digit permutation is not a bijection");
    }
    seen[static_cast<std::size_t>(p)] = true;
  }
  Vocabulary out = *this;
  for (int v = 0; v < radix_; ++v) {
    out.symbols_[static_cast<std::size_t>(v)] = symbols_[static_cast<std::size_t>(perm[v])];
    out.permutation_[static_cast<std::size_t>(v)] = permutation_[static_cast<std::size_t>(perm[v])];
  }
  out.index();
  return out;
}

Vocabulary Vocabulary::permute_digits(std::uint64_t seed) const {
  std::vector<int> perm(static_cast<std::size_t>(radix_));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, /*stream=*/0x766f6361ull);
  rng.shuffle(std::span<int>(perm));
  return with_digit_order(perm);
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["task"] = to_string(task_.kind);
  j["base"] = task_.base;
  j["modulus"] = task_.modulus;
  j["symbols"] = symbols_;
  j["special_tokens"] = {{"PAD", kPad}, {"BOS", kBos}, {"EOS", kEos}};
  j["digit_permutation"] = permutation_;
  return j.dump();
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text);
  auto kind = task_kind_from_string(j.at("task").get<std::string>());
  if (!kind) throw std::invalid_argument("vocabulary json: unknown task");
  TaskSpec task{*kind, j.value("base", 10), j.value("modulus", 0)};
  Vocabulary out = build(task);
  auto symbols = j.at("symbols").get<std::vector<std::string>>();
  if (symbols.size() != out.symbols_.size()) {
    throw std::invalid_argument("vocabulary json: symbol count mismatch");
  }
  if (j.contains("digit_permutation") && task.kind != TaskKind::binop_table) {
    out = out.with_digit_order(j.at("digit_permutation").get<std::vector<int>>());
  }
  if (out.symbols_ != symbols) throw std::invalid_argument("vocabulary json: inconsistent symbols");
  return out;
}

std::string Vocabulary::hash() const { return fnv1a_hex(to_json()); }

}  // namespace extralab

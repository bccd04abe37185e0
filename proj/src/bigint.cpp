// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/bigint.hpp"

#include <algorithm>
#include <cstdio>

namespace extralab {
namespace {

int digit_value(char ch) {
  if (ch >= '0' && ch <= '9') return ch - '0';
  if (ch >= 'a' && ch <= 'z') return ch - 'a' + 10;
  return -1;
}

char digit_char(int value) {
  return static_cast<char>(value < 10 ? '0' + value : 'a' + value - 10);
}

// a -= b for magnitudes with a >= b.
void sub_in_place(std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::int64_t borrow = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int64_t cur = static_cast<std::int64_t>(a[i]) - borrow -
                       (i < b.size() ? static_cast<std::int64_t>(b[i]) : 0);
    borrow = 0;
    if (cur < 0) {
      cur += BigUInt::kLimbBase;
      borrow = 1;
    }
    a[i] = static_cast<std::uint32_t>(cur);
  }
}

}  // namespace

BigUInt::BigUInt(std::uint64_t value) {
  while (value != 0) {
    limbs_.push_back(static_cast<std::uint32_t>(value % kLimbBase));
    value /= kLimbBase;
  }
}

void BigUInt::trim() {
  while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

std::optional<BigUInt> BigUInt::from_decimal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  BigUInt out;
  // Consume 9-digit chunks from the right.
  std::size_t end = text.size();
  while (end > 0) {
    std::size_t begin = end >= 9 ? end - 9 : 0;
    std::uint32_t limb = 0;
    for (std::size_t i = begin; i < end; ++i) {
      char ch = text[i];
      if (ch < '0' || ch > '9') return std::nullopt;
      limb = limb * 10 + static_cast<std::uint32_t>(ch - '0');
    }
    out.limbs_.push_back(limb);
    end = begin;
  }
  out.trim();
  return out;
}

std::optional<BigUInt> BigUInt::from_base(std::string_view text, int base) {
  if (base < 2 || base > 36 || text.empty()) return std::nullopt;
  if (base == 10) return from_decimal(text);
  BigUInt out;
  for (char ch : text) {
    int d = digit_value(ch);
    if (d < 0 || d >= base) return std::nullopt;
    out.mul_add_small(static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(d));
  }
  return out;
}

std::string BigUInt::to_decimal() const {
  if (limbs_.empty()) return "0";
  std::string out = std::to_string(limbs_.back());
  char buf[16];
  for (std::size_t i = limbs_.size() - 1; i-- > 0;) {
    std::snprintf(buf, sizeof buf, "%09u", limbs_[i]);
    out += buf;
  }
  return out;
}

std::vector<int> BigUInt::digits(int base) const {
  if (limbs_.empty()) return {0};
  std::vector<int> out;
  BigUInt work = *this;
  while (!work.is_zero()) {
    out.push_back(static_cast<int>(work.divmod_small(static_cast<std::uint32_t>(base))));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string BigUInt::to_base(int base) const {
  if (base == 10) return to_decimal();
  std::string out;
  for (int d : digits(base)) out.push_back(digit_char(d));
  return out;
}

std::size_t BigUInt::decimal_digits() const {
  if (limbs_.empty()) return 1;
  return 9 * (limbs_.size() - 1) + std::to_string(limbs_.back()).size();
}

std::optional<std::uint64_t> BigUInt::to_u64() const {
  if (limbs_.size() > 3) return std::nullopt;
  unsigned __int128 acc = 0;
  for (std::size_t i = limbs_.size(); i-- > 0;) acc = acc * kLimbBase + limbs_[i];
  if (acc > UINT64_MAX) return std::nullopt;
  return static_cast<std::uint64_t>(acc);
}

BigUInt& BigUInt::operator+=(const BigUInt& rhs) {
  if (limbs_.size() < rhs.limbs_.size()) limbs_.resize(rhs.limbs_.size(), 0);
  std::uint32_t carry = 0;
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    std::uint64_t cur = static_cast<std::uint64_t>(limbs_[i]) + carry +
                        (i < rhs.limbs_.size() ? rhs.limbs_[i] : 0);
    limbs_[i] = static_cast<std::uint32_t>(cur % kLimbBase);
    carry = static_cast<std::uint32_t>(cur / kLimbBase);
  }
  if (carry != 0) limbs_.push_back(carry);
  return *this;
}

std::uint32_t BigUInt::divmod_small(std::uint32_t divisor) {
  std::uint64_t rem = 0;
  for (std::size_t i = limbs_.size(); i-- > 0;) {
    std::uint64_t cur = rem * kLimbBase + limbs_[i];
    limbs_[i] = static_cast<std::uint32_t>(cur / divisor);
    rem = cur % divisor;
  }
  trim();
  return static_cast<std::uint32_t>(rem);
}

void BigUInt::mul_add_small(std::uint32_t factor, std::uint32_t addend) {
  std::uint64_t carry = addend;
  for (auto& limb : limbs_) {
    std::uint64_t cur = static_cast<std::uint64_t>(limb) * factor + carry;
    limb = static_cast<std::uint32_t>(cur % kLimbBase);
    carry = cur / kLimbBase;
  }
  while (carry != 0) {
    limbs_.push_back(static_cast<std::uint32_t>(carry % kLimbBase));
    carry /= kLimbBase;
  }
  trim();
}

std::strong_ordering operator<=>(const BigUInt& a, const BigUInt& b) {
  if (a.limbs_.size() != b.limbs_.size()) return a.limbs_.size() <=> b.limbs_.size();
  for (std::size_t i = a.limbs_.size(); i-- > 0;) {
    if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] <=> b.limbs_[i];
  }
  return std::strong_ordering::equal;
}

BigInt::BigInt(std::int64_t value)
    : negative_(value < 0),
      magnitude_(value < 0 ? static_cast<std::uint64_t>(-(value + 1)) + 1u
                           : static_cast<std::uint64_t>(value)) {}

BigInt BigInt::difference(const BigUInt& lhs, const BigUInt& rhs) {
  BigInt out;
  if (lhs >= rhs) {
    out.magnitude_ = lhs;
    sub_in_place(out.magnitude_.limbs_, rhs.limbs_);
  } else {
    out.magnitude_ = rhs;
    sub_in_place(out.magnitude_.limbs_, lhs.limbs_);
    out.negative_ = true;
  }
  out.magnitude_.trim();
  if (out.magnitude_.is_zero()) out.negative_ = false;
  return out;
}

std::optional<BigInt> BigInt::from_decimal(std::string_view text) {
  bool neg = false;
  if (!text.empty() && text.front() == '-') {
    neg = true;
    text.remove_prefix(1);
  }
  auto mag = BigUInt::from_decimal(text);
  if (!mag) return std::nullopt;
  BigInt out;
  out.magnitude_ = std::move(*mag);
  out.negative_ = neg && !out.magnitude_.is_zero();
  return out;
}

std::string BigInt::to_decimal() const {
  return negative_ ? "-" + magnitude_.to_decimal() : magnitude_.to_decimal();
}

std::optional<std::int64_t> BigInt::to_i64() const {
  auto mag = magnitude_.to_u64();
  if (!mag) return std::nullopt;
  if (!negative_) {
    if (*mag > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
    return static_cast<std::int64_t>(*mag);
  }
  if (*mag > static_cast<std::uint64_t>(INT64_MAX) + 1u) return std::nullopt;
  return static_cast<std::int64_t>(-static_cast<__int128>(*mag));
}

std::strong_ordering operator<=>(const BigInt& a, const BigInt& b) {
  if (a.negative_ != b.negative_) return a.negative_ ? std::strong_ordering::less
                                                     : std::strong_ordering::greater;
  auto mag = a.magnitude_ <=> b.magnitude_;
  return a.negative_ ? 0 <=> mag : mag;
}

}  // namespace extralab

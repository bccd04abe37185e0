// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace extralab {

// Non-negative arbitrary-precision integer stored as little-endian base-1e9
// limbs. The limb vector never carries high zero limbs; zero is empty.
class BigUInt {
 public:
  static constexpr std::uint32_t kLimbBase = 1000000000u;

  BigUInt() = default;
  BigUInt(std::uint64_t value);  // NOLINT(google-explicit-constructor)

  // Parses a string of ASCII decimal digits. Leading zeros are accepted.
  static std::optional<BigUInt> from_decimal(std::string_view text);
  // Parses digits in `base` (2..36) using 0-9 then a-z.
  static std::optional<BigUInt> from_base(std::string_view text, int base);

  std::string to_decimal() const;
  // Renders in `base` (2..36); digits beyond 9 use lowercase letters.
  std::string to_base(int base) const;
  // Most-significant-first digit values in `base`; zero renders as {0}.
  std::vector<int> digits(int base) const;
  std::size_t decimal_digits() const;

  bool is_zero() const { return limbs_.empty(); }
  // Fails when the value does not fit.
  std::optional<std::uint64_t> to_u64() const;

  BigUInt& operator+=(const BigUInt& rhs);
  friend BigUInt operator+(BigUInt lhs, const BigUInt& rhs) { return lhs += rhs; }

  // Divides in place by a small divisor and returns the remainder.
  std::uint32_t divmod_small(std::uint32_t divisor);
  void mul_add_small(std::uint32_t factor, std::uint32_t addend);

  friend std::strong_ordering operator<=>(const BigUInt& a, const BigUInt& b);
  friend bool operator==(const BigUInt& a, const BigUInt& b) = default;

 private:
  void trim();
  std::vector<std::uint32_t> limbs_;

  friend class BigInt;
};

// Signed difference type used for error offsets (prediction minus truth).
class BigInt {
 public:
  BigInt() = default;
  BigInt(std::int64_t value);  // NOLINT(google-explicit-constructor)

  static BigInt difference(const BigUInt& lhs, const BigUInt& rhs);
  static std::optional<BigInt> from_decimal(std::string_view text);

  bool negative() const { return negative_; }
  const BigUInt& magnitude() const { return magnitude_; }
  std::string to_decimal() const;
  std::optional<std::int64_t> to_i64() const;

  friend std::strong_ordering operator<=>(const BigInt& a, const BigInt& b);
  friend bool operator==(const BigInt& a, const BigInt& b) = default;

 private:
  bool negative_ = false;  // never set for zero
  BigUInt magnitude_;
};

}  // namespace extralab

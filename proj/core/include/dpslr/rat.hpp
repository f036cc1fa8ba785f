#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dpslr/errors.hpp"

namespace dpslr {

// Exact rational arithmetic for privacy-budget accounting. Budgets are sums
// of values like 1/3 or 2^-30; accumulating them in floating point can
// over- or under-spend at exact exhaustion, so the ledger works on rationals
// and converts to double only when a noise scale is needed.
//
// Backed by __int128 with normalization after every operation; overflow
// throws rather than silently wrapping.
class Rat {
 public:
  Rat() : num_(0), den_(1) {}
  Rat(long long value) : num_(value), den_(1) {}
  Rat(long long num, long long den);

  // Parses "3", "-0.25", "1e-7", "6.25e2", "1/3", and "2^-30".
  static Rat parse(std::string_view text);

  Rat operator+(const Rat& o) const;
  Rat operator-(const Rat& o) const;
  Rat operator*(const Rat& o) const;
  Rat operator/(const Rat& o) const;

  bool operator==(const Rat& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rat& o) const { return !(*this == o); }
  bool operator<(const Rat& o) const;
  bool operator<=(const Rat& o) const { return *this < o || *this == o; }
  bool operator>(const Rat& o) const { return o < *this; }
  bool operator>=(const Rat& o) const { return o <= *this; }

  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  double to_double() const;
  // "num/den" in lowest terms ("num" when den == 1).
  std::string to_string() const;

 private:
  __int128 num_;
  __int128 den_;  // always > 0

  Rat(__int128 num, __int128 den, int);  // pre-normalized tag
  void normalize();
};

}  // namespace dpslr

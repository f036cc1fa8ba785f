#include "dpslr/rat.hpp"

#include <cctype>
#include <cstdlib>

namespace dpslr {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

__int128 checked_mul(__int128 a, __int128 b) {
  __int128 out;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error("rational overflow in multiplication");
  }
  return out;
}

__int128 checked_add(__int128 a, __int128 b) {
  __int128 out;
  if (__builtin_add_overflow(a, b, &out)) {
    throw Error("rational overflow in addition");
  }
  return out;
}

__int128 pow10_128(int exp) {
  __int128 out = 1;
  for (int i = 0; i < exp; ++i) out = checked_mul(out, 10);
  return out;
}

}  // namespace

Rat::Rat(long long num, long long den) : num_(num), den_(den) {
  if (den == 0) throw InvalidValue("rational with zero denominator");
  normalize();
}

Rat::Rat(__int128 num, __int128 den, int) : num_(num), den_(den) { normalize(); }

void Rat::normalize() {
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  __int128 g = gcd128(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
  if (den_ == 0) throw InvalidValue("rational with zero denominator");
}

Rat Rat::parse(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ParseError("empty rational literal");

  // a/b
  if (auto slash = s.find('/'); slash != std::string::npos) {
    long long num = std::stoll(s.substr(0, slash));
    long long den = std::stoll(s.substr(slash + 1));
    return Rat(num, den);
  }

  // 2^-k (used for deltas like 2^-30)
  if (auto caret = s.find('^'); caret != std::string::npos) {
    long long base = std::stoll(s.substr(0, caret));
    long long exp = std::stoll(s.substr(caret + 1));
    if (base != 2 || exp > 0 || exp < -100) {
      throw ParseError("unsupported power literal: " + s);
    }
    __int128 den = 1;
    for (long long i = 0; i < -exp; ++i) den = checked_mul(den, 2);
    return Rat(1, den, 0);
  }

  // decimal with optional exponent
  bool negative = false;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  __int128 mantissa = 0;
  int frac_digits = 0;
  bool seen_digit = false;
  bool in_fraction = false;
  long exponent = 0;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa = checked_add(checked_mul(mantissa, 10), c - '0');
      if (in_fraction) ++frac_digits;
      seen_digit = true;
    } else if (c == '.' && !in_fraction) {
      in_fraction = true;
    } else if ((c == 'e' || c == 'E') && seen_digit) {
      exponent = std::stol(s.substr(pos + 1));
      break;
    } else {
      throw ParseError("bad numeric literal: " + s);
    }
  }
  if (!seen_digit) throw ParseError("bad numeric literal: " + s);

  long net = exponent - frac_digits;
  __int128 num = negative ? -mantissa : mantissa;
  __int128 den = 1;
  if (net >= 0) {
    num = checked_mul(num, pow10_128(static_cast<int>(net)));
  } else {
    den = pow10_128(static_cast<int>(-net));
  }
  return Rat(num, den, 0);
}

Rat Rat::operator+(const Rat& o) const {
  __int128 g = gcd128(den_, o.den_);
  __int128 lhs = checked_mul(num_, o.den_ / g);
  __int128 rhs = checked_mul(o.num_, den_ / g);
  return Rat(checked_add(lhs, rhs), checked_mul(den_ / g, o.den_), 0);
}

Rat Rat::operator-(const Rat& o) const {
  Rat neg(static_cast<__int128>(-o.num_), o.den_, 0);
  return *this + neg;
}

Rat Rat::operator*(const Rat& o) const {
  __int128 g1 = gcd128(num_, o.den_);
  __int128 g2 = gcd128(o.num_, den_);
  return Rat(checked_mul(num_ / g1, o.num_ / g2),
             checked_mul(den_ / g2, o.den_ / g1), 0);
}

Rat Rat::operator/(const Rat& o) const {
  if (o.num_ == 0) throw InvalidValue("rational division by zero");
  return *this * Rat(o.den_, o.num_, 0);
}

bool Rat::operator<(const Rat& o) const {
  // Denominators are positive, so cross-multiplication preserves order.
  return checked_mul(num_, o.den_) < checked_mul(o.num_, den_);
}

double Rat::to_double() const {
  return static_cast<double>(static_cast<long double>(num_) /
                             static_cast<long double>(den_));
}

std::string Rat::to_string() const {
  auto digits = [](__int128 v) {
    if (v == 0) return std::string("0");
    bool neg = v < 0;
    if (neg) v = -v;
    std::string out;
    while (v > 0) {
      out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    if (neg) out.insert(out.begin(), '-');
    return out;
  };
  if (den_ == 1) return digits(num_);
  return digits(num_) + "/" + digits(den_);
}

}  // namespace dpslr

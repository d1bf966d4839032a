#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace vaxsig {

// Exact rational on int64, normalized with a positive denominator.
// Cell counts are sums of 1/|vaccines| terms, so denominators stay small
// (lcm of per-report vaccine counts); overflow checks are omitted.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n) : num(n), den(1) {}
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return {a.num * b.num, a.den * b.den};
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
};

}  // namespace vaxsig

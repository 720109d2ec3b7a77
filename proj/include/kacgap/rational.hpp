#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <cctype>

namespace kacgap {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational rational(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rational: zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline std::string to_str(const Rational& r) { return r.get_str(); }

inline double to_double(const Rational& r) { return r.get_d(); }

// Accepts "p", "p/q" and plain decimals such as "-0.125".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s.empty()) throw std::invalid_argument("parse_rational: empty string");
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t scale = s.size() - dot - 1;
    Integer num;
    if (num.set_str(digits, 10) != 0) throw std::invalid_argument("parse_rational: bad decimal '" + s + "'");
    Integer den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, scale);
    Rational r(num, den);
    r.canonicalize();
    return r;
  }
  Rational r;
  if (r.set_str(s, 10) != 0) throw std::invalid_argument("parse_rational: bad rational '" + s + "'");
  if (r.get_den() == 0) throw std::invalid_argument("parse_rational: zero denominator");
  r.canonicalize();
  return r;
}

inline Rational rpow(const Rational& base, long exponent) {
  if (exponent < 0) {
    if (base == 0) throw std::domain_error("pow: zero to a negative power");
    Rational inv = 1 / base;
    return rpow(inv, -exponent);
  }
  Rational r;
  mpz_pow_ui(r.get_num_mpz_t(), base.get_num_mpz_t(), static_cast<unsigned long>(exponent));
  mpz_pow_ui(r.get_den_mpz_t(), base.get_den_mpz_t(), static_cast<unsigned long>(exponent));
  r.canonicalize();
  return r;
}

inline Integer ipow(const Integer& base, unsigned long exponent) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), exponent);
  return r;
}

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

inline bool is_half_integer(const Rational& r) { return r.get_den() == 2; }

inline Integer floor_q(const Rational& r) {
  Integer q;
  mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

inline Integer ceil_q(const Rational& r) {
  Integer q;
  mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

// (a)_n = a (a+1) ... (a+n-1)
inline Rational rising_factorial(const Rational& a, long n) {
  Rational r = 1;
  Rational term = a;
  for (long k = 0; k < n; ++k) {
    r *= term;
    term += 1;
  }
  return r;
}

inline Integer binomial(unsigned long n, unsigned long k) {
  Integer r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

// Generalized binomial coefficient C(top, k) for rational top.
inline Rational binomial(const Rational& top, long k) {
  if (k < 0) return 0;
  Rational r = 1;
  for (long i = 0; i < k; ++i) {
    r *= top - i;
    r /= i + 1;
  }
  return r;
}

// A value that is exact when all of its inputs were exact, and a double otherwise.
class Quantity {
 public:
  Quantity() : exact_(Rational(0)), approx_(0.0) {}
  Quantity(const Rational& v) : exact_(v), approx_(v.get_d()) {}  // NOLINT
  Quantity(long v) : Quantity(Rational(v)) {}                     // NOLINT
  Quantity(int v) : Quantity(Rational(v)) {}                      // NOLINT
  static Quantity approximate(double v) {
    Quantity q;
    q.exact_.reset();
    q.approx_ = v;
    return q;
  }

  bool is_exact() const { return exact_.has_value(); }
  const Rational& exact() const {
    if (!exact_) throw std::logic_error("Quantity: value is not exact");
    return *exact_;
  }
  double approx() const { return approx_; }

  std::string to_string() const {
    if (exact_) return exact_->get_str();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", approx_);
    return buf;
  }

  friend Quantity operator+(const Quantity& a, const Quantity& b) {
    if (a.exact_ && b.exact_) return Quantity(Rational(*a.exact_ + *b.exact_));
    return approximate(a.approx_ + b.approx_);
  }
  friend Quantity operator-(const Quantity& a, const Quantity& b) {
    if (a.exact_ && b.exact_) return Quantity(Rational(*a.exact_ - *b.exact_));
    return approximate(a.approx_ - b.approx_);
  }
  friend Quantity operator*(const Quantity& a, const Quantity& b) {
    if (a.exact_ && b.exact_) return Quantity(Rational(*a.exact_ * *b.exact_));
    return approximate(a.approx_ * b.approx_);
  }
  friend Quantity operator/(const Quantity& a, const Quantity& b) {
    if (a.exact_ && b.exact_) {
      if (*b.exact_ == 0) throw std::domain_error("Quantity: division by zero");
      return Quantity(Rational(*a.exact_ / *b.exact_));
    }
    return approximate(a.approx_ / b.approx_);
  }
  Quantity operator-() const {
    if (exact_) return Quantity(Rational(-*exact_));
    return approximate(-approx_);
  }

  // Exact three-way comparison when both sides are exact; otherwise values
  // closer than `slack` compare equal.
  friend int compare(const Quantity& a, const Quantity& b, double slack = 1e-9) {
    if (a.exact_ && b.exact_) {
      int c = cmp(*a.exact_, *b.exact_);
      return (c > 0) - (c < 0);
    }
    double d = a.approx_ - b.approx_;
    if (std::fabs(d) <= slack) return 0;
    return d > 0 ? 1 : -1;
  }

  friend bool operator==(const Quantity& a, const Quantity& b) { return compare(a, b, 0.0) == 0; }

 private:
  std::optional<Rational> exact_;
  double approx_;
};

inline Quantity qmin(const Quantity& a, const Quantity& b) { return compare(a, b) <= 0 ? a : b; }
inline Quantity qmax(const Quantity& a, const Quantity& b) { return compare(a, b) >= 0 ? a : b; }

}  // namespace kacgap

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kacgap/rational.hpp"

namespace kacgap {

// coefficient * sqrt(pi)^sqrt_pi_power
struct PiScaled {
  Rational coefficient = 1;
  int sqrt_pi_power = 0;

  bool pi_free() const { return sqrt_pi_power == 0; }

  double to_double() const {
    return coefficient.get_d() * std::pow(std::sqrt(std::numbers::pi), sqrt_pi_power);
  }

  // log of the absolute value; safe when the coefficient under/overflows a double.
  double log_abs() const {
    if (coefficient == 0) return -INFINITY;
    long en = 0, ed = 0;
    double mn = mpz_get_d_2exp(&en, coefficient.get_num_mpz_t());
    double md = mpz_get_d_2exp(&ed, coefficient.get_den_mpz_t());
    return std::log(std::fabs(mn / md)) + static_cast<double>(en - ed) * std::numbers::ln2 +
           0.5 * sqrt_pi_power * std::log(std::numbers::pi);
  }

  friend PiScaled operator*(const PiScaled& a, const PiScaled& b) {
    return {Rational(a.coefficient * b.coefficient), a.sqrt_pi_power + b.sqrt_pi_power};
  }
  friend PiScaled operator/(const PiScaled& a, const PiScaled& b) {
    return {Rational(a.coefficient / b.coefficient), a.sqrt_pi_power - b.sqrt_pi_power};
  }
};

// Gamma(x) for x a positive integer or half-integer.
inline PiScaled gamma_half_integer(const Rational& x) {
  if (x <= 0) throw std::domain_error("gamma_half_integer: argument must be positive");
  if (is_integer(x)) {
    unsigned long m = x.get_num().get_ui();
    Integer f;
    mpz_fac_ui(f.get_mpz_t(), m - 1);
    return {Rational(f), 0};
  }
  if (!is_half_integer(x)) throw std::domain_error("gamma_half_integer: argument must be a multiple of 1/2");
  // Gamma(m + 1/2) = (2m-1)!! / 2^m * sqrt(pi)
  unsigned long m = floor_q(x).get_ui();
  Integer dfact;
  if (m == 0) {
    dfact = 1;
  } else {
    mpz_2fac_ui(dfact.get_mpz_t(), 2 * m - 1);
  }
  Rational c(dfact);
  c /= ipow(Integer(2), m);
  return {c, 1};
}

// Gamma(x + n) / Gamma(x) for integer n >= 0, i.e. the rising factorial.
inline Rational gamma_shift_ratio(const Rational& x, long n) { return rising_factorial(x, n); }

// Gamma(a) / Gamma(b) for a, b positive integers or half-integers.
inline PiScaled gamma_ratio(const Rational& a, const Rational& b) {
  Rational d = a - b;
  if (is_integer(d)) {
    long k = d.get_num().get_si();
    if (k >= 0) return {rising_factorial(b, k), 0};
    return {Rational(1 / rising_factorial(a, -k)), 0};
  }
  return gamma_half_integer(a) / gamma_half_integer(b);
}

}  // namespace kacgap

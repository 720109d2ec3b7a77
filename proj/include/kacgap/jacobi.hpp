#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kacgap/gamma_exact.hpp"
#include "kacgap/quadrature.hpp"
#include "kacgap/rational.hpp"

namespace kacgap {

struct JacobiParams {
  int n = 0;
  Rational alpha = 0;
  Rational beta = 0;

  void validate() const {
    if (n < 0) throw std::invalid_argument("JacobiParams: degree must be nonnegative");
    if (alpha <= -1 || beta <= -1) throw std::invalid_argument("JacobiParams: alpha and beta must exceed -1");
  }
};

struct PolyValue {
  std::optional<Rational> exact;
  double approx = 0.0;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T jacobi_recurrence(int n, const T& a, const T& b, const T& x) {
  T p0 = 1;
  if (n == 0) return p0;
  T p1 = (a + 1) + (a + b + 2) * (x - 1) / 2;
  for (int k = 2; k <= n; ++k) {
    T s = 2 * k + a + b;
    T c1 = 2 * k * (k + a + b) * (s - 2);
    T c2 = (s - 1) * (s * (s - 2) * x + a * a - b * b);
    T c3 = 2 * (k + a - 1) * (k + b - 1) * s;
    T p2 = (c2 * p1 - c3 * p0) / c1;
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  return p1;
}

}  // namespace detail

inline Rational jacobi_exact(const JacobiParams& p, const Rational& x) {
  p.validate();
  return detail::jacobi_recurrence<Rational>(p.n, p.alpha, p.beta, x);
}

inline double jacobi_real(int n, double alpha, double beta, double x) {
  return detail::jacobi_recurrence<double>(n, alpha, beta, x);
}

inline PolyValue jacobi_eval(const JacobiParams& p, const Rational& x) {
  Rational v = jacobi_exact(p, x);
  return {v, v.get_d()};
}

inline PolyValue jacobi_eval(const JacobiParams& p, double x) {
  p.validate();
  return {std::nullopt, jacobi_real(p.n, p.alpha.get_d(), p.beta.get_d(), x)};
}

// P_n^{(alpha,beta)}(1) = C(n+alpha, n)
inline Rational jacobi_at_one(const JacobiParams& p) {
  p.validate();
  return binomial(Rational(p.n + p.alpha), p.n);
}

inline Rational legendre_exact(int n, const Rational& x) {
  if (n < 0) throw std::invalid_argument("legendre: degree must be nonnegative");
  Rational p0 = 1;
  if (n == 0) return p0;
  Rational p1 = x;
  for (int k = 1; k < n; ++k) {
    Rational p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  return p1;
}

inline double legendre_real(int n, double x) {
  if (n < 0) throw std::invalid_argument("legendre: degree must be nonnegative");
  double p0 = 1.0;
  if (n == 0) return p0;
  double p1 = x;
  for (int k = 1; k < n; ++k) {
    double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

inline PolyValue legendre_eval(int n, const Rational& x) {
  Rational v = legendre_exact(n, x);
  return {v, v.get_d()};
}

inline PolyValue legendre_eval(int n, double x) { return {std::nullopt, legendre_real(n, x)}; }

// Coefficients c_k of P_n(x) = sum c_k x^k.
inline std::vector<Rational> legendre_coefficients(int n) {
  std::vector<Rational> p0{Rational(1)};
  if (n == 0) return p0;
  std::vector<Rational> p1{Rational(0), Rational(1)};
  for (int k = 1; k < n; ++k) {
    std::vector<Rational> p2(k + 2, Rational(0));
    for (int i = 0; i <= k; ++i) p2[i + 1] += (2 * k + 1) * p1[i];
    for (int i = 0; i < k; ++i) p2[i] -= k * p0[i];
    for (auto& c : p2) c /= k + 1;
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  return p1;
}

// Right side of P_n(x)^2 < 2 / (n pi sqrt(1-x^2)).
inline double polya_bound(int n, double x) {
  if (n < 1) throw std::invalid_argument("polya_bound: degree must be at least 1");
  if (!(std::fabs(x) < 1.0)) throw std::domain_error("polya_bound: |x| must be below 1");
  return 2.0 / (n * std::numbers::pi * std::sqrt(1.0 - x * x));
}

// Uniform bound on sqrt(1-x^2) w(x) p_n(x)^2 for the orthonormal Jacobi polynomials.
inline double nem_bound(const JacobiParams& p) {
  p.validate();
  double a = p.alpha.get_d(), b = p.beta.get_d();
  if (a < -0.5 || b < -0.5) throw std::domain_error("nem_bound: requires alpha, beta >= -1/2");
  return 2.0 * std::numbers::e * (2.0 + std::hypot(a, b)) / std::numbers::pi;
}

// l_n^2 as rational * sqrt(pi)^k when 2 alpha, 2 beta and alpha + beta are integers.
inline std::optional<PiScaled> orthonormalizer_squared_exact(const JacobiParams& p) {
  p.validate();
  Rational two_a = 2 * p.alpha, two_b = 2 * p.beta;
  Rational ab = p.alpha + p.beta;
  if (!is_integer(two_a) || !is_integer(two_b) || !is_integer(ab)) return std::nullopt;
  long abi = ab.get_num().get_si();
  // (2n+ab+1) Gamma(n+ab+1) written so the n = 0, ab = -1 case stays finite.
  PiScaled top;
  if (p.n == 0) {
    top = gamma_half_integer(Rational(ab + 2));
  } else {
    top = gamma_half_integer(Rational(p.n + ab + 1));
    top.coefficient *= 2 * p.n + ab + 1;
  }
  top.coefficient *= gamma_half_integer(Rational(p.n + 1)).coefficient;
  PiScaled bottom = gamma_half_integer(Rational(p.n + p.alpha + 1)) * gamma_half_integer(Rational(p.n + p.beta + 1));
  PiScaled r = top / bottom;
  r.coefficient /= rpow(Rational(2), abi + 1);
  return r;
}

inline double orthonormalizer(const JacobiParams& p) {
  if (auto e = orthonormalizer_squared_exact(p)) return std::sqrt(e->to_double());
  double a = p.alpha.get_d(), b = p.beta.get_d();
  int n = p.n;
  double log_top = (n == 0) ? std::lgamma(a + b + 2.0)
                            : std::log(2.0 * n + a + b + 1.0) + std::lgamma(n + a + b + 1.0);
  double log_l2 = log_top + std::lgamma(n + 1.0) - std::lgamma(n + a + 1.0) - std::lgamma(n + b + 1.0) -
                  (a + b + 1.0) * std::numbers::ln2;
  return std::exp(0.5 * log_l2);
}

// P_n(x)/P_n(1) from the integral representation over the probability measure
// proportional to (1-r^2)^{alpha-beta-1} r^{2beta+1} sin^{2beta}(theta).
inline double koornwinder_ratio(const JacobiParams& p, double x, double tol = 1e-8) {
  p.validate();
  if (!(p.alpha > p.beta) || !(p.beta > rational(-1, 2)))
    throw std::domain_error("koornwinder_ratio: requires alpha > beta > -1/2");
  if (x < -1.0 || x > 1.0) throw std::domain_error("koornwinder_ratio: x must lie in [-1,1]");
  const double a = p.alpha.get_d(), b = p.beta.get_d();
  const double base_re = 0.5 * (1.0 + x);
  const double base_slope = 0.5 * (1.0 - x);
  const double im_scale = std::sqrt(std::max(0.0, 1.0 - x * x));

  auto evaluate = [&](int m) {
    // u = r^2 in [0,1] carries weight (1-u)^{alpha-beta-1} u^beta; c = cos(theta)
    // carries (1-c^2)^{beta-1/2}.
    QuadratureRule ru = gauss_jacobi(m, a - b - 1.0, b);
    QuadratureRule rc = gauss_jacobi(m, b - 0.5, b - 0.5);
    double wu = 0.0, wc = 0.0;
    for (double w : ru.weights) wu += w;
    for (double w : rc.weights) wc += w;
    double re = 0.0, im = 0.0;
    for (int i = 0; i < m; ++i) {
      double u = 0.5 * (1.0 + ru.nodes[i]);
      double sr = std::sqrt(std::max(0.0, u));
      for (int j = 0; j < m; ++j) {
        std::complex<double> z(base_re - base_slope * u, im_scale * sr * rc.nodes[j]);
        std::complex<double> zn = std::pow(z, p.n);
        double w = ru.weights[i] * rc.weights[j];
        re += w * zn.real();
        im += w * zn.imag();
      }
    }
    return std::pair{re / (wu * wc), im / (wu * wc)};
  };

  int m = std::max(4, (p.n + 2) / 2 + 1);
  auto prev = evaluate(m);
  while (true) {
    int next = 2 * m;
    if (next > kMaxQuadratureNodes) throw QuadratureError("koornwinder_ratio: refinement did not converge");
    auto cur = evaluate(next);
    if (std::fabs(cur.first - prev.first) <= tol) {
      if (std::fabs(cur.second) > 1e-6) throw QuadratureError("koornwinder_ratio: imaginary part does not vanish");
      return cur.first;
    }
    prev = cur;
    m = next;
  }
}

struct BoundComparison {
  double nem_side = 0.0;       // bound on kappa^2 derived from the orthonormal uniform bound
  double printed_side = 0.0;   // the same expression with 1/b in place of 1/b^2
  double trivial_side = 1.0;   // kappa^2 <= 1
  double actual = 0.0;         // kappa^2 = b^{2beta-1} (P_n(-1+2b^2)/P_n(1))^2 evaluated directly
  bool trivial_wins = false;
  std::optional<double> stirling_lower;  // lower estimate of nem_side, set when 2n+1 < alpha < beta
};

inline BoundComparison markov_vs_nem_region(const JacobiParams& p, double b) {
  p.validate();
  if (!(b > 0.0 && b < 1.0)) throw std::domain_error("markov_vs_nem_region: b must lie in (0,1)");
  const double a = p.alpha.get_d(), be = p.beta.get_d();
  const int n = p.n;
  // sqrt(1-x^2) w(x) at x = -1+2b^2 is 2^{a+be+1} b^{2be+1} (1-b^2)^{a+1/2}; b^{2be-1} of it cancels.
  const double log_geom = 2.0 * std::log(b) + (a + 0.5) * std::log1p(-b * b);
  const double log_rest = std::log(2.0 * std::numbers::e / std::numbers::pi) + std::lgamma(n + 1.0) +
                          std::log(2.0 + std::hypot(a, be)) - std::log(2.0 * n + a + be + 1.0) +
                          std::lgamma(n + be + 1.0) - std::lgamma(n + a + be + 1.0) + 2.0 * std::lgamma(a + 1.0) -
                          std::lgamma(n + a + 1.0);
  BoundComparison out;
  out.nem_side = std::exp(log_rest - log_geom);
  out.printed_side = out.nem_side * b;
  out.trivial_wins = out.nem_side > out.trivial_side;
  const double xr = -1.0 + 2.0 * b * b;
  const double ratio = jacobi_real(n, a, be, xr) / jacobi_real(n, a, be, 1.0);
  out.actual = std::pow(b, 2.0 * be - 1.0) * ratio * ratio;
  if (2.0 * n + 1.0 < a && a < be) {
    double r = (1.0 - 1.0 / (12.0 * (n + a + be + 1.0))) * (1.0 - 1.0 / (12.0 * (n + a + 1.0)));
    double log_low = n - 0.5 * std::log(2.0 * std::numbers::pi) + std::lgamma(n + 1.0) - log_geom +
                     (a + 0.5 - n) * std::log(a) - a * std::log(be) -
                     (2.0 * n + 2.0 * a + 2.0 * be + 1.5) * std::numbers::ln2 + std::log(r);
    out.stirling_lower = std::exp(log_low);
  }
  return out;
}

}  // namespace kacgap

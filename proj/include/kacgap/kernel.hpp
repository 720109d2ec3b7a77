#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kacgap/jacobi.hpp"
#include "kacgap/quadrature.hpp"
#include "kacgap/random.hpp"
#include "kacgap/rational.hpp"

namespace kacgap {

enum class KernelFamily { UniformRedirection, Morgenstern, PowerFamily, HalfPower, Tabulated };

class ScatteringKernel {
 public:
  static ScatteringKernel uniform() { return ScatteringKernel(KernelFamily::UniformRedirection, 0); }
  static ScatteringKernel morgenstern() { return ScatteringKernel(KernelFamily::Morgenstern, rational(1, 2)); }

  // b(x) = (1-alpha) 2^alpha (1-x)^{-alpha}, 0 <= alpha < 1
  static ScatteringKernel power(const Rational& alpha) {
    if (alpha < 0 || alpha >= 1) throw std::invalid_argument("power kernel: alpha must lie in [0,1)");
    return ScatteringKernel(KernelFamily::PowerFamily, alpha);
  }

  // b(x) = 2(alpha+1) x^alpha on [0,1], zero on [-1,0)
  static ScatteringKernel half_power(const Rational& alpha) {
    if (alpha < 0) throw std::invalid_argument("halfpower kernel: alpha must be nonnegative");
    return ScatteringKernel(KernelFamily::HalfPower, alpha);
  }

  // Piecewise-linear density through the given points, zero outside them,
  // rescaled so that (1/2) int b = 1.
  static ScatteringKernel tabulated(std::vector<std::pair<double, double>> points, std::string source = "table") {
    if (points.size() < 2) throw std::invalid_argument("tabulated kernel: need at least two points");
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto [x, b] = points[i];
      if (x < -1.0 || x > 1.0) throw std::invalid_argument("tabulated kernel: x outside [-1,1]");
      if (b < 0.0 || !std::isfinite(b)) throw std::invalid_argument("tabulated kernel: b must be finite and >= 0");
      if (i > 0 && !(x > points[i - 1].first))
        throw std::invalid_argument("tabulated kernel: x must be strictly increasing");
    }
    ScatteringKernel k(KernelFamily::Tabulated, 0);
    k.table_ = std::move(points);
    k.source_ = std::move(source);
    double half_mass = 0.0;
    for (std::size_t i = 0; i + 1 < k.table_.size(); ++i)
      half_mass += 0.25 * (k.table_[i + 1].first - k.table_[i].first) * (k.table_[i].second + k.table_[i + 1].second);
    if (!(half_mass > 0.0)) throw std::invalid_argument("tabulated kernel: zero mass");
    for (auto& p : k.table_) p.second /= half_mass;
    return k;
  }

  static ScatteringKernel from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel table '" + path + "'");
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double x, b;
      if (!(ss >> x >> b)) {
        if (lineno == 1) continue;  // header
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two numbers");
      }
      pts.emplace_back(x, b);
    }
    return tabulated(std::move(pts), "file:" + path);
  }

  // uniform | morgenstern | power:A | halfpower:A | file:PATH
  static ScatteringKernel parse(const std::string& selector) {
    if (selector == "uniform") return uniform();
    if (selector == "morgenstern") return morgenstern();
    auto colon = selector.find(':');
    if (colon != std::string::npos) {
      std::string head = selector.substr(0, colon), arg = selector.substr(colon + 1);
      if (head == "power") return power(parse_rational(arg));
      if (head == "halfpower") return half_power(parse_rational(arg));
      if (head == "file") return from_csv(arg);
    }
    throw std::invalid_argument("unknown kernel selector '" + selector +
                                "' (expected uniform, morgenstern, power:A, halfpower:A or file:PATH)");
  }

  KernelFamily family() const { return family_; }
  const Rational& alpha() const { return alpha_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

  // Kernels of the form (1-alpha) 2^alpha (1-x)^{-alpha}.
  bool is_power_type() const {
    return family_ == KernelFamily::UniformRedirection || family_ == KernelFamily::Morgenstern ||
           family_ == KernelFamily::PowerFamily;
  }

  std::string id() const {
    switch (family_) {
      case KernelFamily::UniformRedirection: return "uniform";
      case KernelFamily::Morgenstern: return "morgenstern";
      case KernelFamily::PowerFamily: return "power:" + to_str(alpha_);
      case KernelFamily::HalfPower: return "halfpower:" + to_str(alpha_);
      case KernelFamily::Tabulated: return source_;
    }
    return "?";
  }

  double density(double s) const {
    if (s < -1.0 || s > 1.0) return 0.0;
    const double a = alpha_.get_d();
    if (is_power_type()) {
      if (a == 0.0) return 1.0;
      if (s >= 1.0) return INFINITY;
      return (1.0 - a) * std::pow(2.0, a) * std::pow(1.0 - s, -a);
    }
    if (family_ == KernelFamily::HalfPower) return s < 0.0 ? 0.0 : 2.0 * (a + 1.0) * std::pow(s, a);
    if (s < table_.front().first || s > table_.back().first) return 0.0;
    auto it = std::upper_bound(table_.begin(), table_.end(), s,
                               [](double v, const std::pair<double, double>& p) { return v < p.first; });
    if (it == table_.end()) return table_.back().second;
    auto prev = it - 1;
    double t = (s - prev->first) / (it->first - prev->first);
    return prev->second + t * (it->second - prev->second);
  }

  bool positive_near_one() const {
    if (family_ != KernelFamily::Tabulated) return true;
    return table_.back().first == 1.0 && table_.back().second > 0.0;
  }

 private:
  ScatteringKernel(KernelFamily f, Rational a) : family_(f), alpha_(std::move(a)) {}

  KernelFamily family_;
  Rational alpha_;
  std::vector<std::pair<double, double>> table_;
  std::string source_;
};

struct KernelMoments {
  Quantity b1;
  Quantity b2;
  bool exact() const { return b1.is_exact() && b2.is_exact(); }
};

inline KernelMoments dirac_moments() { return {Quantity(1), Quantity(1)}; }

namespace detail {

// Integrate g(x) * b(x) over [-1,1] for a tabulated kernel, segment by segment.
template <class G>
double tabulated_integral(const ScatteringKernel& k, G&& g, int points_per_segment) {
  const auto& t = k.table();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    QuadratureRule r = gauss_legendre(points_per_segment, t[i].first, t[i + 1].first);
    for (std::size_t j = 0; j < r.nodes.size(); ++j) total += r.weights[j] * g(r.nodes[j]) * k.density(r.nodes[j]);
  }
  return total;
}

}  // namespace detail

inline KernelMoments moments(const ScatteringKernel& k) {
  const Rational& a = k.alpha();
  switch (k.family()) {
    case KernelFamily::UniformRedirection:
    case KernelFamily::Morgenstern:
    case KernelFamily::PowerFamily: {
      Rational one_b1 = 2 * (1 - a) / (2 - a);
      Rational one_b2 = 4 * (1 - a) / ((2 - a) * (3 - a));
      return {Quantity(Rational(1 - one_b1)), Quantity(Rational(1 - one_b2))};
    }
    case KernelFamily::HalfPower:
      return {Quantity(Rational((a + 1) / (a + 2))), Quantity(Rational((a + 1) / (a + 3)))};
    case KernelFamily::Tabulated: {
      double mass = 0.5 * detail::tabulated_integral(k, [](double) { return 1.0; }, 4);
      if (std::fabs(mass - 1.0) > 1e-10) throw std::runtime_error("moments: kernel is not normalized");
      double b1 = 0.5 * detail::tabulated_integral(k, [](double x) { return x; }, 4);
      double b2 = 0.5 * detail::tabulated_integral(k, [](double x) { return x * x; }, 4);
      return {Quantity::approximate(b1), Quantity::approximate(b2)};
    }
  }
  throw std::logic_error("moments: unknown family");
}

// lambda_n = (1/2) int P_n(s) b(s) ds, exact for the closed-form families.
inline Quantity n2_eigenvalue(const ScatteringKernel& k, int n) {
  if (n < 0) throw std::invalid_argument("n2_eigenvalue: degree must be nonnegative");
  if (n == 0) return Quantity(1);
  const Rational& a = k.alpha();
  if (k.is_power_type()) return Quantity(Rational(rising_factorial(a, n) / rising_factorial(Rational(2 - a), n)));
  if (k.family() == KernelFamily::HalfPower) {
    std::vector<Rational> c = legendre_coefficients(n);
    Rational s = 0;
    for (std::size_t j = 0; j < c.size(); ++j)
      if (c[j] != 0) s += c[j] / (Rational(static_cast<long>(j)) + a + 1);
    return Quantity(Rational((a + 1) * s));
  }
  int m = std::max(4, n / 2 + 2);
  return Quantity::approximate(0.5 * detail::tabulated_integral(k, [n](double x) { return legendre_real(n, x); }, m));
}

// The same eigenvalue by Gauss-type quadrature; used as an independent check.
inline double n2_eigenvalue_quadrature(const ScatteringKernel& k, int n) {
  const double a = k.alpha().get_d();
  int m = std::max(8, n + 4);
  if (k.is_power_type()) {
    // weight (1-x)^{-alpha}
    QuadratureRule r = gauss_jacobi(m, -a, 0.0);
    return 0.5 * (1.0 - a) * std::pow(2.0, a) * r.integrate([n](double x) { return legendre_real(n, x); });
  }
  if (k.family() == KernelFamily::HalfPower) {
    // x = (1+t)/2 on [0,1]; x^alpha = 2^{-alpha} (1+t)^alpha
    QuadratureRule r = gauss_jacobi(m, 0.0, a);
    double s = r.integrate([n](double t) { return legendre_real(n, 0.5 * (1.0 + t)); });
    return 0.5 * 2.0 * (a + 1.0) * std::pow(2.0, -a) * 0.5 * s;
  }
  return 0.5 * detail::tabulated_integral(k, [n](double x) { return legendre_real(n, x); }, m);
}

class DivergentIntegral : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// int b(x) (1-x^2)^{-1/4} dx, the constant in the Polya-derived envelope.
inline double polya_envelope_integral(const ScatteringKernel& k) {
  const double a = k.alpha().get_d();
  auto beta_fn = [](double p, double q) { return std::exp(std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q)); };
  if (k.is_power_type()) {
    if (a >= 0.75) throw DivergentIntegral("Polya envelope integral diverges for power kernels with alpha >= 3/4");
    return (1.0 - a) * std::numbers::sqrt2 * beta_fn(0.75 - a, 0.75);
  }
  if (k.family() == KernelFamily::HalfPower) return (a + 1.0) * beta_fn(0.5 * (a + 1.0), 0.75);
  const auto& t = k.table();
  double total = 0.0;
  const int m = 24;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    double x0 = t[i].first, x1 = t[i + 1].first;
    bool left = (x0 == -1.0), right = (x1 == 1.0);
    if (left && right) {
      QuadratureRule r = gauss_jacobi(m, -0.25, -0.25);
      total += r.integrate([&](double x) { return k.density(x); });
    } else if (right) {
      double h = 0.5 * (1.0 - x0);
      QuadratureRule r = gauss_jacobi(m, -0.25, 0.0);
      for (std::size_t j = 0; j < r.nodes.size(); ++j) {
        double x = x0 + h * (1.0 + r.nodes[j]);
        total += r.weights[j] * h * std::pow(h, -0.25) * std::pow(1.0 + x, -0.25) * k.density(x);
      }
    } else if (left) {
      double h = 0.5 * (x1 + 1.0);
      QuadratureRule r = gauss_jacobi(m, 0.0, -0.25);
      for (std::size_t j = 0; j < r.nodes.size(); ++j) {
        double x = -1.0 + h * (1.0 + r.nodes[j]);
        total += r.weights[j] * h * std::pow(h, -0.25) * std::pow(1.0 - x, -0.25) * k.density(x);
      }
    } else {
      QuadratureRule r = gauss_legendre(m, x0, x1);
      total += r.integrate([&](double x) { return std::pow(1.0 - x * x, -0.25) * k.density(x); });
    }
  }
  return total;
}

// Bound on |lambda_n| for n >= 1 from |P_n(x)| <= sqrt(2/(n pi)) (1-x^2)^{-1/4}.
inline double polya_envelope(double integral, int n) {
  return integral / std::sqrt(2.0 * std::numbers::pi * n);
}

struct Delta2Result {
  Quantity value;           // 2 (1 - max_{n>=1} lambda_n)
  Quantity lambda_max;
  int witness = 1;          // smallest degree attaining the maximum
  std::string method;       // "monotone" or "polya-cutoff"
  int cutoff = 1;           // all degrees >= cutoff are bounded by the envelope
  double envelope_integral = 0.0;
};

inline Delta2Result delta2(const ScatteringKernel& k, int max_degree = 100000) {
  Delta2Result out;
  if (k.is_power_type()) {
    // lambda_{n+1}/lambda_n = (alpha+n)/(2-alpha+n) lies in [0,1), so lambda_1 is the maximum.
    out.lambda_max = n2_eigenvalue(k, 1);
    out.value = Quantity(2) * (Quantity(1) - out.lambda_max);
    out.witness = 1;
    out.method = "monotone";
    out.cutoff = 2;
    return out;
  }
  const double integral = polya_envelope_integral(k);
  out.envelope_integral = integral;
  out.method = "polya-cutoff";
  Quantity best = n2_eigenvalue(k, 1);
  int witness = 1;
  int n = 1;
  while (true) {
    if (best.approx() > 0.0 && polya_envelope(integral, n + 1) <= best.approx() - 1e-12) break;
    ++n;
    if (n > max_degree) throw std::runtime_error("delta2: Polya cutoff not reached");
    Quantity ln = n2_eigenvalue(k, n);
    if (ln.approx() > best.approx() + 1e-12) {
      best = ln;
      witness = n;
    }
  }
  out.cutoff = n + 1;
  out.lambda_max = best;
  out.witness = witness;
  out.value = Quantity(2) * (Quantity(1) - best);
  return out;
}

struct Theorem1Gate {
  bool b2_exceeds_b1 = false;
  bool delta2_condition = false;
  Quantity delta2;
  Quantity rhs;  // (20/9)(1 - B2)
  bool holds() const { return b2_exceeds_b1 && delta2_condition; }
  std::string failed_clause() const {
    if (!b2_exceeds_b1) return "B2 > B1";
    if (!delta2_condition) return "Delta2 >= (20/9)(1-B2)";
    return "";
  }
};

inline Theorem1Gate check_theorem1_condition(const ScatteringKernel& k) {
  KernelMoments m = moments(k);
  Theorem1Gate g;
  g.b2_exceeds_b1 = compare(m.b2, m.b1) > 0;
  g.delta2 = delta2(k).value;
  g.rhs = Quantity(rational(20, 9)) * (Quantity(1) - m.b2);
  g.delta2_condition = compare(g.delta2, g.rhs) >= 0;
  return g;
}

// Draw s = cos(theta) with density b(s)/2 on [-1,1].
inline double sample_cosine(const ScatteringKernel& k, CounterRng& rng) {
  const double a = k.alpha().get_d();
  if (k.is_power_type()) {
    double u = uniform01(rng);
    return 1.0 - 2.0 * std::pow(u, 1.0 / (1.0 - a));
  }
  if (k.family() == KernelFamily::HalfPower) return std::pow(uniform01(rng), 1.0 / (a + 1.0));
  const auto& t = k.table();
  double lo = t.front().first, hi = t.back().first;
  double top = 0.0;
  for (auto& p : t) top = std::max(top, p.second);
  for (int trial = 0; trial < 1000000; ++trial) {
    double s = lo + (hi - lo) * uniform01(rng);
    if (uniform01(rng) * top <= k.density(s)) return s;
  }
  throw std::runtime_error("sample_direction: rejection sampler failed after 1e6 trials");
}

inline Eigen::Vector3d sample_direction(const ScatteringKernel& k, const Eigen::Vector3d& e, CounterRng& rng) {
  if (std::fabs(e.norm() - 1.0) > 1e-12) throw std::invalid_argument("sample_direction: axis must be a unit vector");
  double s = std::clamp(sample_cosine(k, rng), -1.0, 1.0);
  double phi = 2.0 * std::numbers::pi * uniform01(rng);
  Eigen::Vector3d helper = std::fabs(e.x()) < 0.6 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  Eigen::Vector3d u1 = e.cross(helper).normalized();
  Eigen::Vector3d u2 = e.cross(u1);
  double r = std::sqrt(std::max(0.0, 1.0 - s * s));
  return s * e + r * (std::cos(phi) * u1 + std::sin(phi) * u2);
}

}  // namespace kacgap

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kacgap/kernel.hpp"
#include "kacgap/rational.hpp"
#include "kacgap/state.hpp"

namespace kacgap {

// a + c sqrt(d) with rational a, c and nonnegative integer d.
struct Surd {
  Rational a = 0;
  Rational c = 0;
  Integer d = 0;

  static Surd of(const Rational& r) { return {r, Rational(0), Integer(0)}; }

  bool is_rational() const { return c == 0 || d == 0 || mpz_perfect_square_p(d.get_mpz_t()); }

  std::optional<Rational> rational_value() const {
    if (c == 0 || d == 0) return a;
    if (!mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
    Integer s;
    mpz_sqrt(s.get_mpz_t(), d.get_mpz_t());
    return Rational(a + c * s);
  }

  int sign() const {
    if (auto r = rational_value()) return sgn(*r);
    const int sa = sgn(a), sc = sgn(c);
    if (sa == 0) return sc;
    if (sa == sc) return sa;
    Rational lhs = a * a, rhs = c * c * d;
    int cm = cmp(lhs, rhs);
    if (cm == 0) return 0;
    return cm > 0 ? sa : sc;
  }

  double to_double() const { return a.get_d() + c.get_d() * std::sqrt(d.get_d()); }

  std::string to_string() const {
    if (auto r = rational_value()) return r->get_str();
    const Rational ac = abs(c);
    std::string head = a == 0 ? (c > 0 ? "" : "-") : a.get_str() + (c > 0 ? " + " : " - ");
    std::string coef = ac == 1 ? "" : ac.get_str() + "*";
    return head + coef + "sqrt(" + d.get_str() + ")";
  }

  friend Surd operator-(const Surd& x, const Surd& y) {
    if (x.c != 0 && y.c != 0 && x.d != y.d) throw std::domain_error("Surd: radicands differ");
    Integer d = x.c != 0 ? x.d : y.d;
    return {Rational(x.a - y.a), Rational(x.c - y.c), d};
  }
  friend Surd operator*(const Rational& s, const Surd& x) { return {Rational(s * x.a), Rational(s * x.c), x.d}; }
};

inline int compare(const Surd& x, const Surd& y) { return (x - y).sign(); }

// lambda = 1 - (1 - B_moment) * coefficient
struct QEigenvalue {
  std::string label;
  int moment = 2;
  Surd coefficient;
  Quantity value;
  Quantity generator;  // N (1 - lambda)
};

using Matrix2Q = std::array<std::array<Rational, 2>, 2>;

struct QSubspaceSpectrum {
  int n = 0, l = 0, N = 3;
  KernelMoments moments;
  std::vector<QEigenvalue> eigenvalues;
  std::optional<Matrix2Q> coupling;  // N(I-Q) on V_{2,0} is (1-B2)/(N-1) times this matrix
  bool degenerate = false;
  std::string note;
};

inline QEigenvalue make_q_eigenvalue(std::string label, int moment, const Surd& coef, int N, const KernelMoments& m) {
  QEigenvalue q;
  q.label = std::move(label);
  q.moment = moment;
  q.coefficient = coef;
  const Quantity one_minus_b = Quantity(1) - (moment == 1 ? m.b1 : m.b2);
  if (auto r = coef.rational_value()) {
    q.value = Quantity(1) - one_minus_b * Quantity(*r);
    q.generator = Quantity(N) * one_minus_b * Quantity(*r);
  } else {
    q.value = Quantity::approximate(1.0 - one_minus_b.approx() * coef.to_double());
    q.generator = Quantity::approximate(N * one_minus_b.approx() * coef.to_double());
  }
  return q;
}

struct V20Block {
  int N = 4;
  Matrix2Q matrix;                         // integer entries
  std::array<Surd, 2> matrix_eigenvalues;  // (2N-1) +- sqrt(N^2-3N+1)
  std::array<QEigenvalue, 2> q_eigenvalues;
  bool trace_matches = false;
  bool determinant_matches = false;
};

inline V20Block v20_block(int N, const KernelMoments& m) {
  if (N == 3) throw std::domain_error("v20_block: for N=3 the identity psi = 2 phi - 1/2 makes the block one dimensional");
  if (N < 3) throw std::invalid_argument("v20_block: N must be at least 3");
  V20Block b;
  b.N = N;
  b.matrix = {{{Rational(N + 1), Rational(1)}, {Rational(N - 3), Rational(3 * N - 3)}}};
  const Integer disc = Integer(N) * N - 3 * N + 1;
  b.matrix_eigenvalues = {Surd{Rational(2 * N - 1), Rational(1), disc}, Surd{Rational(2 * N - 1), Rational(-1), disc}};
  const Rational tr = b.matrix[0][0] + b.matrix[1][1];
  const Rational det = b.matrix[0][0] * b.matrix[1][1] - b.matrix[0][1] * b.matrix[1][0];
  // sum and product of (2N-1) +- sqrt(disc)
  b.trace_matches = (tr == 2 * (2 * N - 1));
  b.determinant_matches = (det == Rational(Integer(2 * N - 1) * (2 * N - 1) - disc));
  const Rational scale = rational(1, static_cast<long>(N) * (N - 1));
  b.q_eigenvalues = {make_q_eigenvalue("V20+", 2, scale * b.matrix_eigenvalues[1], N, m),
                     make_q_eigenvalue("V20-", 2, scale * b.matrix_eigenvalues[0], N, m)};
  return b;
}

inline QSubspaceSpectrum q_subspace_spectrum(int n, int l, int N, const KernelMoments& m) {
  if (N < 3) throw std::invalid_argument("q_subspace_spectrum: N must be at least 3");
  QSubspaceSpectrum s;
  s.n = n;
  s.l = l;
  s.N = N;
  s.moments = m;
  const Rational inv = rational(1, N - 1);
  if ((n == 0 && l == 1) || (n == 1 && l == 0)) {
    s.eigenvalues.push_back(make_q_eigenvalue(n == 0 ? "V01" : "V10", 1, Surd::of(inv), N, m));
  } else if (n == 1 && l == 1) {
    s.eigenvalues.push_back(make_q_eigenvalue("V11", 2, Surd::of(inv), N, m));
  } else if (n == 0 && l == 2) {
    s.eigenvalues.push_back(make_q_eigenvalue("V02", 2, Surd::of(rational(3, 2 * (N - 1))), N, m));
  } else if (n == 2 && l == 0) {
    if (N == 3) {
      s.degenerate = true;
      s.note = "psi = 2 phi - 1/2";
      s.eigenvalues.push_back(make_q_eigenvalue("V20", 2, Surd::of(Rational(1)), N, m));
    } else {
      V20Block b = v20_block(N, m);
      s.coupling = b.matrix;
      s.eigenvalues = {b.q_eigenvalues[0], b.q_eigenvalues[1]};
    }
  } else {
    throw std::invalid_argument("q_subspace_spectrum: only (n,l) with n+l in {1,2} are supported");
  }
  return s;
}

// ---- pointwise evaluation ---------------------------------------------------

enum class FunctionKind { Constant, SumQuartic, PairDotSquared, Sym11, Sym02, Antisym01, Antisym10, V20Mode };

struct FunctionDescriptor {
  FunctionKind kind = FunctionKind::Constant;
  int a = 0, b = 1;  // components
  int p = 0, q = 1;  // particles for antisymmetric families
  int sign = 1;      // V20 mode branch

  static FunctionDescriptor constant() { return {FunctionKind::Constant}; }
  static FunctionDescriptor sum_quartic() { return {FunctionKind::SumQuartic}; }
  static FunctionDescriptor pair_dot_squared() { return {FunctionKind::PairDotSquared}; }
  static FunctionDescriptor sym11(int a = 0) { return {FunctionKind::Sym11, a}; }
  static FunctionDescriptor sym02(int a = 0, int b = 1) { return {FunctionKind::Sym02, a, b}; }
  static FunctionDescriptor antisym01(int a = 0, int p = 0, int q = 1) { return {FunctionKind::Antisym01, a, 1, p, q}; }
  static FunctionDescriptor antisym10(int p = 0, int q = 1) { return {FunctionKind::Antisym10, 0, 1, p, q}; }
  static FunctionDescriptor v20_mode(int sign) { return {FunctionKind::V20Mode, 0, 1, 0, 1, sign}; }

  bool centered() const {
    return kind != FunctionKind::Constant && kind != FunctionKind::SumQuartic && kind != FunctionKind::PairDotSquared;
  }

  std::string name() const {
    switch (kind) {
      case FunctionKind::Constant: return "const";
      case FunctionKind::SumQuartic: return "phi";
      case FunctionKind::PairDotSquared: return "psi";
      case FunctionKind::Sym11: return "sym11";
      case FunctionKind::Sym02: return "sym02";
      case FunctionKind::Antisym01: return "antisym01";
      case FunctionKind::Antisym10: return "antisym10";
      case FunctionKind::V20Mode: return sign > 0 ? "v20+" : "v20-";
    }
    return "?";
  }

  static FunctionDescriptor parse(const std::string& s) {
    if (s == "const") return constant();
    if (s == "phi") return sum_quartic();
    if (s == "psi") return pair_dot_squared();
    if (s == "sym11") return sym11();
    if (s == "sym02") return sym02();
    if (s == "antisym01") return antisym01();
    if (s == "antisym10") return antisym10();
    if (s == "v20+") return v20_mode(1);
    if (s == "v20-") return v20_mode(-1);
    throw std::invalid_argument("unknown observable '" + s +
                                "' (expected const, phi, psi, sym11, sym02, antisym01, antisym10, v20+, v20-)");
  }

  void validate(int N) const {
    if (a < 0 || a > 2 || b < 0 || b > 2) throw std::invalid_argument("FunctionDescriptor: component out of range");
    if (kind == FunctionKind::Sym02 && a == b) throw std::invalid_argument("FunctionDescriptor: sym02 needs a != b");
    if ((kind == FunctionKind::Antisym01 || kind == FunctionKind::Antisym10) && (p == q || p < 0 || q < 0 || p >= N || q >= N))
      throw std::invalid_argument("FunctionDescriptor: antisymmetric family needs two distinct particles");
    if (kind == FunctionKind::V20Mode && N == 3 && sign < 0)
      throw std::invalid_argument("FunctionDescriptor: for N=3 only the v20+ mode exists");
  }
};

// Mean of sum |v_j|^4 under the uniform law on the constrained sphere.
inline Rational mean_sum_quartic(int N) { return rational(5 * (N - 1), static_cast<long>(N) * (3 * N - 1)); }

// Mean of sum_{i != j} (v_i . v_j)^2; follows from E[Q phi] = E[phi].
inline Rational mean_pair_dot_squared(int N) { return 2 - (N + 1) * mean_sum_quartic(N); }

namespace detail {

// Coefficients (x, y) of the V20 mode x (phi - E phi) + y (psi - E psi).
inline std::array<double, 2> v20_coefficients(int N, int sign) {
  if (N == 3) {
    if (sign < 0) throw std::invalid_argument("v20 mode: for N=3 only the + branch exists");
    return {1.0, 0.0};
  }
  const double s = std::sqrt(static_cast<double>(N) * N - 3.0 * N + 1.0);
  // sign > 0 picks the larger Q eigenvalue, the smaller eigenvalue of the matrix.
  const double mval = (2.0 * N - 1.0) - (sign > 0 ? s : -s);
  return {static_cast<double>(N - 3), mval - (N + 1.0)};
}

inline double sum_quartic(const VelocityState& s) {
  double r = 0.0;
  for (const auto& x : s.v) r += x.squaredNorm() * x.squaredNorm();
  return r;
}

inline double pair_dot_squared(const VelocityState& s) {
  double r = 0.0;
  for (int i = 0; i < s.N(); ++i)
    for (int j = i + 1; j < s.N(); ++j) {
      double d = s.v[i].dot(s.v[j]);
      r += 2.0 * d * d;
    }
  return r;
}

struct PairGeometry {
  Eigen::Vector3d c, e;
  double r = 0.0, A = 0.0;
  Eigen::Matrix3d M;
};

inline PairGeometry pair_geometry(const Eigen::Vector3d& vi, const Eigen::Vector3d& vj, double B2) {
  PairGeometry g;
  g.c = 0.5 * (vi + vj);
  Eigen::Vector3d d = vi - vj;
  g.r = 0.5 * d.norm();
  g.e = d / d.norm();
  g.A = g.c.squaredNorm() + g.r * g.r;
  g.M = 0.5 * (1.0 - B2) * Eigen::Matrix3d::Identity() + 0.5 * (3.0 * B2 - 1.0) * g.e * g.e.transpose();
  return g;
}

inline double delta_phi(const VelocityState& s, int i, int j, const PairGeometry& g) {
  const double ni = s.v[i].squaredNorm(), nj = s.v[j].squaredNorm();
  return 2.0 * g.A * g.A + 8.0 * g.r * g.r * g.c.dot(g.M * g.c) - ni * ni - nj * nj;
}

inline double delta_psi(const VelocityState& s, int i, int j, const PairGeometry& g) {
  const double after = g.c.squaredNorm() - g.r * g.r;
  const double before = s.v[i].dot(s.v[j]);
  double d = 2.0 * (after * after - before * before);
  for (int k = 0; k < s.N(); ++k) {
    if (k == i || k == j) continue;
    const Eigen::Vector3d& vk = s.v[k];
    const double ck = g.c.dot(vk), ik = s.v[i].dot(vk), jk = s.v[j].dot(vk);
    d += 2.0 * (2.0 * ck * ck + 2.0 * g.r * g.r * vk.dot(g.M * vk) - ik * ik - jk * jk);
  }
  return d;
}

}  // namespace detail

inline double evaluate(const FunctionDescriptor& f, const VelocityState& s) {
  f.validate(s.N());
  switch (f.kind) {
    case FunctionKind::Constant: return 1.0;
    case FunctionKind::SumQuartic: return detail::sum_quartic(s);
    case FunctionKind::PairDotSquared: return detail::pair_dot_squared(s);
    case FunctionKind::Sym11: {
      double r = 0.0;
      for (const auto& x : s.v) r += x.squaredNorm() * x[f.a];
      return r;
    }
    case FunctionKind::Sym02: {
      double r = 0.0;
      for (const auto& x : s.v) r += x[f.a] * x[f.b];
      return r;
    }
    case FunctionKind::Antisym01: return s.v[f.p][f.a] - s.v[f.q][f.a];
    case FunctionKind::Antisym10: return s.v[f.p].squaredNorm() - s.v[f.q].squaredNorm();
    case FunctionKind::V20Mode: {
      auto [x, y] = detail::v20_coefficients(s.N(), f.sign);
      double val = x * (detail::sum_quartic(s) - mean_sum_quartic(s.N()).get_d());
      if (y != 0.0) val += y * (detail::pair_dot_squared(s) - mean_pair_dot_squared(s.N()).get_d());
      return val;
    }
  }
  return 0.0;
}

// (Qf)(state) with the sphere integral of each pair term replaced by its first
// and second moment closed forms.
inline double apply_q_pointwise(const FunctionDescriptor& f, const VelocityState& s, double B1, double B2) {
  const int N = s.N();
  s.validate(1e-12);
  f.validate(N);
  const double base = evaluate(f, s);
  if (f.kind == FunctionKind::Constant) return base;
  std::array<double, 2> v20{};
  if (f.kind == FunctionKind::V20Mode) v20 = detail::v20_coefficients(N, f.sign);
  double total = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      if ((s.v[i] - s.v[j]).norm() < 1e-14) continue;
      const detail::PairGeometry g = detail::pair_geometry(s.v[i], s.v[j], B2);
      double d = 0.0;
      switch (f.kind) {
        case FunctionKind::Constant: break;
        case FunctionKind::SumQuartic: d = detail::delta_phi(s, i, j, g); break;
        case FunctionKind::PairDotSquared: d = detail::delta_psi(s, i, j, g); break;
        case FunctionKind::Sym11: {
          const int a = f.a;
          d = 2.0 * g.A * g.c[a] + 4.0 * g.r * g.r * (g.M * g.c)[a] - s.v[i].squaredNorm() * s.v[i][a] -
              s.v[j].squaredNorm() * s.v[j][a];
          break;
        }
        case FunctionKind::Sym02:
          d = 2.0 * g.c[f.a] * g.c[f.b] + 2.0 * g.r * g.r * g.M(f.a, f.b) - s.v[i][f.a] * s.v[i][f.b] -
              s.v[j][f.a] * s.v[j][f.b];
          break;
        case FunctionKind::Antisym01:
        case FunctionKind::Antisym10: {
          for (int x : {i, j}) {
            const double w = (x == f.p) ? 1.0 : (x == f.q ? -1.0 : 0.0);
            if (w == 0.0) continue;
            const double side = (x == i) ? 1.0 : -1.0;
            if (f.kind == FunctionKind::Antisym01) {
              d += w * (g.c[f.a] + side * g.r * B1 * g.e[f.a] - s.v[x][f.a]);
            } else {
              d += w * (g.A + side * 2.0 * g.r * B1 * g.c.dot(g.e) - s.v[x].squaredNorm());
            }
          }
          break;
        }
        case FunctionKind::V20Mode:
          d = v20[0] * detail::delta_phi(s, i, j, g);
          if (v20[1] != 0.0) d += v20[1] * detail::delta_psi(s, i, j, g);
          break;
      }
      total += d;
    }
  return base + 2.0 * total / (static_cast<double>(N) * (N - 1));
}

inline double apply_q_pointwise(const FunctionDescriptor& f, const VelocityState& s, const ScatteringKernel& k) {
  KernelMoments m = moments(k);
  return apply_q_pointwise(f, s, m.b1.approx(), m.b2.approx());
}

// Q eigenvalue of an eigen-descriptor, or nullopt for phi, psi.
inline std::optional<double> descriptor_eigenvalue(const FunctionDescriptor& f, int N, double B1, double B2) {
  const double inv = 1.0 / (N - 1.0);
  switch (f.kind) {
    case FunctionKind::Constant: return 1.0;
    case FunctionKind::Sym11: return 1.0 - (1.0 - B2) * inv;
    case FunctionKind::Sym02: return 1.0 - 1.5 * (1.0 - B2) * inv;
    case FunctionKind::Antisym01:
    case FunctionKind::Antisym10: return 1.0 - (1.0 - B1) * inv;
    case FunctionKind::V20Mode: {
      if (N == 3) return B2;
      const double s = std::sqrt(static_cast<double>(N) * N - 3.0 * N + 1.0);
      const double mval = (2.0 * N - 1.0) - (f.sign > 0 ? s : -s);
      return 1.0 - (1.0 - B2) * mval / (static_cast<double>(N) * (N - 1));
    }
    default: return std::nullopt;
  }
}

// Affine image of phi and psi under Q: Q phi = c0 + c1 phi + c2 psi.
struct AffineImage {
  double constant = 0.0, phi = 0.0, psi = 0.0;
};

inline AffineImage q_phi_affine(int N, double B2) {
  const double k = (1.0 - B2) / N;
  return {2.0 * k / (N - 1.0), 1.0 - k * (N + 1.0) / (N - 1.0), -k / (N - 1.0)};
}

inline AffineImage q_psi_affine(int N, double B2) {
  const double k = (1.0 - B2) / N;
  return {k, -k * (N - 3.0) / (N - 1.0), 1.0 - 3.0 * k};
}

inline nlohmann::json to_json(const QEigenvalue& q) {
  return {{"label", q.label},
          {"moment", q.moment == 1 ? "B1" : "B2"},
          {"coefficient", q.coefficient.to_string()},
          {"lambda", q.value.to_string()},
          {"lambda_approx", q.value.approx()},
          {"generator", q.generator.to_string()}};
}

inline nlohmann::json to_json(const QSubspaceSpectrum& s) {
  nlohmann::json eig = nlohmann::json::array();
  for (const auto& e : s.eigenvalues) eig.push_back(to_json(e));
  nlohmann::json j{{"n", s.n}, {"l", s.l}, {"N", s.N}, {"eigenvalues", std::move(eig)}};
  if (s.coupling) {
    nlohmann::json m = nlohmann::json::array();
    for (const auto& row : *s.coupling) m.push_back({row[0].get_str(), row[1].get_str()});
    j["coupling"] = {{"scale", "(1-B2)/(N-1)"}, {"matrix", std::move(m)}};
  }
  if (s.degenerate) j["note"] = s.note;
  return j;
}

}  // namespace kacgap

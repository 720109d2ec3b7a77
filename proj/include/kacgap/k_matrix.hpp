#pragma once

#include <Eigen/Dense>
#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kacgap/correlation.hpp"
#include "kacgap/rational.hpp"

namespace kacgap {

using Monomial = std::array<int, 3>;
using RationalPoly = std::vector<Rational>;  // coefficients, lowest degree first

namespace poly {

inline void trim(RationalPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline RationalPoly mul(const RationalPoly& a, const RationalPoly& b) {
  if (a.empty() || b.empty()) return {};
  RationalPoly r(a.size() + b.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  trim(r);
  return r;
}

inline RationalPoly sub(RationalPoly a, const RationalPoly& b) {
  if (a.size() < b.size()) a.resize(b.size(), Rational(0));
  for (std::size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
  trim(a);
  return a;
}

inline RationalPoly derivative(const RationalPoly& p) {
  RationalPoly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * static_cast<long>(i));
  trim(d);
  return d;
}

// Quotient and remainder of a / b.
inline std::pair<RationalPoly, RationalPoly> divmod(RationalPoly a, const RationalPoly& b) {
  if (b.empty()) throw std::domain_error("poly::divmod: division by zero polynomial");
  trim(a);
  if (a.size() < b.size()) return {{}, a};
  RationalPoly q(a.size() - b.size() + 1, Rational(0));
  for (std::size_t k = q.size(); k-- > 0;) {
    Rational c = a[k + b.size() - 1] / b.back();
    q[k] = c;
    for (std::size_t j = 0; j < b.size(); ++j) a[k + j] -= c * b[j];
  }
  trim(a);
  trim(q);
  return {q, a};
}

inline RationalPoly monic(RationalPoly p) {
  trim(p);
  if (p.empty()) return p;
  Rational lead = p.back();
  for (auto& c : p) c /= lead;
  return p;
}

inline RationalPoly gcd(RationalPoly a, RationalPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    RationalPoly r = divmod(a, b).second;
    a = std::move(b);
    b = monic(std::move(r));
  }
  return monic(a);
}

inline Rational eval(const RationalPoly& p, const Rational& x) {
  Rational acc = 0;
  for (std::size_t k = p.size(); k-- > 0;) acc = acc * x + p[k];
  return acc;
}

}  // namespace poly

struct BlockSpectrum {
  int degree = 0;
  int size = 0;
  RationalPoly charpoly;                              // monic, lowest degree first
  std::vector<std::pair<Rational, int>> eigenvalues;  // exact roots with multiplicity
  std::vector<double> float_eigenvalues;
  bool complete = false;                              // all roots recovered as rationals
};

struct KMatrixOracle {
  int d = 0;
  Rational b;
  Rational alpha;
  std::vector<Monomial> basis;
  std::vector<std::vector<Rational>> matrix;  // matrix[out][in]
  std::vector<BlockSpectrum> blocks;

  std::vector<std::pair<Rational, int>> eigenvalues() const {
    std::map<Rational, int> acc;
    for (const auto& bl : blocks)
      for (const auto& [v, m] : bl.eigenvalues) acc[v] += m;
    return {acc.begin(), acc.end()};
  }
};

namespace detail {

inline Integer double_factorial_odd(int m) {  // (2m-1)!!
  Integer r = 1;
  for (int k = 1; k <= 2 * m - 1; k += 2) r *= k;
  return r;
}

// E[y^j] for y with density proportional to (1-|y|^2)^{alpha-3/2} on the unit
// ball, or uniform on the sphere when alpha = 1/2.
inline Rational ball_moment(const Monomial& j, const Rational& alpha) {
  for (int c : j)
    if (c % 2 != 0) return 0;
  const int m1 = j[0] / 2, m2 = j[1] / 2, m3 = j[2] / 2;
  const int M = m1 + m2 + m3;
  Rational sphere(double_factorial_odd(m1) * double_factorial_odd(m2) * double_factorial_odd(m3),
                  double_factorial_odd(M + 1));
  sphere.canonicalize();
  Rational radial = 1;
  for (int k = 0; k < M; ++k) radial *= (Rational(k) + rational(3, 2)) / (Rational(k) + alpha + 1);
  return sphere * radial;
}

inline Integer multinomial3(int k1, int k2, int k3) {
  Integer r;
  mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(k1 + k2 + k3));
  Integer f;
  for (int k : {k1, k2, k3}) {
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
    r /= f;
  }
  return r;
}

// Characteristic polynomial by exact reduction to upper Hessenberg form.
inline RationalPoly charpoly(std::vector<std::vector<Rational>> h) {
  const int n = static_cast<int>(h.size());
  for (int j = 0; j + 2 < n; ++j) {
    int piv = -1;
    for (int i = j + 1; i < n; ++i)
      if (h[i][j] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != j + 1) {
      std::swap(h[piv], h[j + 1]);
      for (int r = 0; r < n; ++r) std::swap(h[r][piv], h[r][j + 1]);
    }
    for (int i = j + 2; i < n; ++i) {
      if (h[i][j] == 0) continue;
      Rational m = h[i][j] / h[j + 1][j];
      for (int c = 0; c < n; ++c) h[i][c] -= m * h[j + 1][c];
      for (int r = 0; r < n; ++r) h[r][j + 1] += m * h[r][i];
    }
  }
  std::vector<RationalPoly> p(n + 1);
  p[0] = {Rational(1)};
  for (int k = 1; k <= n; ++k) {
    p[k] = poly::mul({Rational(-h[k - 1][k - 1]), Rational(1)}, p[k - 1]);
    Rational prod = 1;
    for (int i = k - 2; i >= 0; --i) {
      prod *= h[i + 1][i];
      if (prod == 0) break;
      Rational c = h[i][k - 1] * prod;
      if (c == 0) continue;
      RationalPoly t = p[i];
      for (auto& x : t) x *= c;
      p[k] = poly::sub(p[k], t);
    }
  }
  return p[n];
}

// Newton refinement in 512-bit floating point, then continued-fraction convergents
// tested for exact vanishing.
inline std::optional<Rational> recover_rational_root(const RationalPoly& g, double guess) {
  const mp_bitcnt_t prec = 512;
  std::vector<mpf_class> c;
  for (const auto& q : g) c.emplace_back(q, prec);
  RationalPoly dg = poly::derivative(g);
  std::vector<mpf_class> dc;
  for (const auto& q : dg) dc.emplace_back(q, prec);
  mpf_class x(guess, prec);
  for (int it = 0; it < 200; ++it) {
    mpf_class f(0, prec), fp(0, prec);
    for (std::size_t k = c.size(); k-- > 0;) f = f * x + c[k];
    for (std::size_t k = dc.size(); k-- > 0;) fp = fp * x + dc[k];
    if (fp == 0) break;
    mpf_class step(f / fp, prec);
    x -= step;
    if (abs(step) < mpf_class(1e-140, prec)) break;
  }
  // continued fraction of x
  Integer h_prev = 1, h_prev2 = 0, k_prev = 0, k_prev2 = 1;
  mpf_class r(x, prec);
  for (int term = 0; term < 200; ++term) {
    mpf_class fl(0, prec);
    mpf_floor(fl.get_mpf_t(), r.get_mpf_t());
    Integer a(fl);
    Integer h = a * h_prev + h_prev2;
    Integer k = a * k_prev + k_prev2;
    Rational cand(h, k);
    cand.canonicalize();
    if (poly::eval(g, cand) == 0) return cand;
    if (mpz_sizeinbase(k.get_mpz_t(), 10) > 120) break;
    mpf_class frac(r - fl, prec);
    if (frac == 0) break;
    r = 1 / frac;
    h_prev2 = h_prev;
    h_prev = h;
    k_prev2 = k_prev;
    k_prev = k;
  }
  return std::nullopt;
}

}  // namespace detail

// Matrix of the generalized correlation operator K f(v) = E_y f(a s y + b v),
// s = sqrt(1-|v|^2), on monomials of total degree <= d in v in R^3.
inline KMatrixOracle k_matrix_oracle(const Rational& b, const Rational& alpha, int d) {
  if (d < 0 || d > 6) throw std::invalid_argument("k_matrix_oracle: degree must be in 0..6");
  if (alpha < rational(1, 2)) throw std::domain_error("k_matrix_oracle: alpha must be at least 1/2");
  if (b < -1 || b > 1) throw std::domain_error("k_matrix_oracle: |b| must be at most 1");
  KMatrixOracle out;
  out.d = d;
  out.b = b;
  out.alpha = alpha;
  const Rational a2 = 1 - b * b;
  for (int k = 0; k <= d; ++k)
    for (int p1 = k; p1 >= 0; --p1)
      for (int p2 = k - p1; p2 >= 0; --p2) out.basis.push_back({p1, p2, k - p1 - p2});
  std::map<Monomial, int> index;
  for (std::size_t i = 0; i < out.basis.size(); ++i) index[out.basis[i]] = static_cast<int>(i);
  const std::size_t dim = out.basis.size();
  out.matrix.assign(dim, std::vector<Rational>(dim, Rational(0)));

  for (std::size_t col = 0; col < dim; ++col) {
    const Monomial& p = out.basis[col];
    const int deg = p[0] + p[1] + p[2];
    for (int j1 = 0; j1 <= p[0]; j1 += 2)
      for (int j2 = 0; j2 <= p[1]; j2 += 2)
        for (int j3 = 0; j3 <= p[2]; j3 += 2) {
          const Monomial j{j1, j2, j3};
          const int J = j1 + j2 + j3;
          Rational coef = detail::ball_moment(j, alpha) * rpow(a2, J / 2) * rpow(b, deg - J);
          for (int c = 0; c < 3; ++c)
            coef *= binomial(static_cast<unsigned long>(p[c]), static_cast<unsigned long>(j[c]));
          if (coef == 0) continue;
          const Monomial rest{p[0] - j1, p[1] - j2, p[2] - j3};
          // (1 - |v|^2)^{J/2}
          const int h = J / 2;
          for (int k = 0; k <= h; ++k) {
            Integer ck = binomial(static_cast<unsigned long>(h), static_cast<unsigned long>(k));
            if (k % 2 != 0) ck = -ck;
            for (int k1 = 0; k1 <= k; ++k1)
              for (int k2 = 0; k1 + k2 <= k; ++k2) {
                const int k3 = k - k1 - k2;
                Monomial outm{rest[0] + 2 * k1, rest[1] + 2 * k2, rest[2] + 2 * k3};
                out.matrix[index.at(outm)][col] += coef * ck * detail::multinomial3(k1, k2, k3);
              }
          }
        }
  }

  // Diagonal blocks by homogeneous degree.
  std::size_t start = 0;
  for (int k = 0; k <= d; ++k) {
    const int sz = (k + 1) * (k + 2) / 2;
    BlockSpectrum bs;
    bs.degree = k;
    bs.size = sz;
    std::vector<std::vector<Rational>> blk(sz, std::vector<Rational>(sz));
    Eigen::MatrixXd fb(sz, sz);
    for (int r = 0; r < sz; ++r)
      for (int c = 0; c < sz; ++c) {
        blk[r][c] = out.matrix[start + r][start + c];
        fb(r, c) = blk[r][c].get_d();
      }
    bs.charpoly = detail::charpoly(blk);
    Eigen::EigenSolver<Eigen::MatrixXd> es(fb, false);
    for (int i = 0; i < sz; ++i) bs.float_eigenvalues.push_back(es.eigenvalues()(i).real());
    std::sort(bs.float_eigenvalues.begin(), bs.float_eigenvalues.end());

    RationalPoly rest = bs.charpoly;
    RationalPoly g = poly::divmod(rest, poly::gcd(rest, poly::derivative(rest))).first;
    std::vector<double> seeds = bs.float_eigenvalues;
    for (double s : seeds) {
      if (g.size() <= 1) break;
      auto root = detail::recover_rational_root(g, s);
      if (!root) continue;
      bool seen = false;
      for (auto& e : bs.eigenvalues) seen = seen || e.first == *root;
      if (seen) continue;
      RationalPoly lin{Rational(-*root), Rational(1)};
      int mult = 0;
      while (true) {
        auto [q, r] = poly::divmod(rest, lin);
        if (!r.empty()) break;
        rest = q;
        ++mult;
      }
      g = poly::divmod(g, lin).first;
      bs.eigenvalues.emplace_back(*root, mult);
    }
    std::sort(bs.eigenvalues.begin(), bs.eigenvalues.end(),
              [](const auto& x, const auto& y) { return x.first > y.first; });
    bs.complete = (rest.size() == 1);
    out.blocks.push_back(std::move(bs));
    start += sz;
  }
  return out;
}

inline KMatrixOracle k_matrix_oracle(int N, int d) {
  check_particle_count(N);
  return k_matrix_oracle(rational(-1, N - 1), correlation_alpha(N), d);
}

}  // namespace kacgap

#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <vector>

#include "kacgap/jacobi.hpp"
#include "kacgap/quadrature.hpp"

using namespace kacgap;

namespace {

// binomial(top, k) for rational top, computed as a falling product.
Rational falling_binomial(const Rational& top, int k) {
  if (k < 0) return 0;
  Rational r = 1;
  for (int i = 0; i < k; ++i) r = r * (top - i) / (i + 1);
  return r;
}

// Explicit sum P_n(x) = sum_s C(n+a, n-s) C(n+b, s) ((x-1)/2)^s ((x+1)/2)^(n-s).
Rational jacobi_explicit_sum(int n, const Rational& a, const Rational& b, const Rational& x) {
  Rational total = 0;
  const Rational lo = (x - 1) / 2, hi = (x + 1) / 2;
  for (int s = 0; s <= n; ++s) total += falling_binomial(n + a, n - s) * falling_binomial(n + b, s) * rpow(lo, s) * rpow(hi, n - s);
  return total;
}

double jacobi_explicit_sum(int n, double a, double b, double x) {
  double total = 0.0;
  for (int s = 0; s <= n; ++s) {
    double c1 = 1.0, c2 = 1.0;
    for (int i = 0; i < n - s; ++i) c1 *= (n + a - i) / (i + 1);
    for (int i = 0; i < s; ++i) c2 *= (n + b - i) / (i + 1);
    total += c1 * c2 * std::pow((x - 1) / 2, s) * std::pow((x + 1) / 2, n - s);
  }
  return total;
}

}  // namespace

TEST(Jacobi, RecurrenceMatchesExplicitSumExactly) {
  const std::vector<Rational> xs{-1, rational(-1, 2), 0, rational(1, 3), 1};
  const std::vector<std::pair<Rational, Rational>> params{
      {0, 0}, {rational(1, 2), rational(3, 2)}, {rational(7, 2), rational(5, 2)}, {rational(-1, 2), rational(1, 3)}, {5, 0}};
  for (const auto& [a, b] : params)
    for (int n = 0; n <= 12; ++n)
      for (const auto& x : xs) EXPECT_EQ(jacobi_exact({n, a, b}, x), jacobi_explicit_sum(n, a, b, x)) << n;
}

TEST(Jacobi, FloatingEvaluationMatchesExplicitSum) {
  for (int n = 0; n <= 15; ++n)
    for (double x : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
      const double want = jacobi_explicit_sum(n, 2.5, 1.5, x);
      EXPECT_NEAR(jacobi_real(n, 2.5, 1.5, x), want, 1e-10 * std::max(1.0, std::fabs(want)));
    }
}

TEST(Jacobi, ValueAtOneIsBinomial) {
  for (int twice_a = -1; twice_a <= 21; twice_a += 2) {
    const Rational a = rational(twice_a, 2);
    for (int n = 0; n <= 20; ++n) {
      const JacobiParams p{n, a, rational(3, 2)};
      EXPECT_EQ(jacobi_at_one(p), falling_binomial(n + a, n));
      EXPECT_EQ(jacobi_exact(p, Rational(1)), falling_binomial(n + a, n));
    }
  }
}

TEST(Jacobi, LegendreAgreesWithJacobiZeroZero) {
  for (int n = 0; n <= 15; ++n)
    for (const Rational& x : {Rational(-1), rational(-2, 7), Rational(0), rational(5, 9)})
      EXPECT_EQ(legendre_exact(n, x), jacobi_exact({n, 0, 0}, x));
}

TEST(Jacobi, LegendreCoefficientsEvaluateToLegendre) {
  for (int n = 0; n <= 12; ++n) {
    const auto c = legendre_coefficients(n);
    const Rational x = rational(3, 5);
    Rational s = 0;
    for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * rpow(x, static_cast<long>(j));
    EXPECT_EQ(s, legendre_exact(n, x));
  }
}

TEST(Quadrature, GaussJacobiIntegratesBetaMoments) {
  // int (1-x)^a (1+x)^b ((1+x)/2)^k dx = 2^{a+b+1} B(a+1, b+k+1)
  for (auto [a, b] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {0.5, 1.5}, {-0.5, -0.5}, {3.0, 0.25}}) {
    QuadratureRule r = gauss_jacobi(12, a, b);
    for (int k = 0; k <= 20; ++k) {
      const double got = r.integrate([k](double x) { return std::pow(0.5 * (1.0 + x), k); });
      const double want = std::pow(2.0, a + b + 1.0) * boost::math::beta(a + 1.0, b + k + 1.0);
      EXPECT_NEAR(got / want, 1.0, 1e-12) << a << " " << b << " " << k;
    }
  }
}

TEST(Quadrature, JacobiPolynomialsAreOrthogonal) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {2.5, 1.5}, {-0.5, 4.0}}) {
    QuadratureRule r = gauss_jacobi(16, a, b);
    for (int m = 0; m <= 10; ++m)
      for (int n = 0; n < m; ++n) {
        const double ip = r.integrate([&](double x) { return jacobi_real(m, a, b, x) * jacobi_real(n, a, b, x); });
        EXPECT_LT(std::fabs(ip), 1e-8);
      }
  }
}

TEST(Jacobi, OrthonormalizerMatchesQuadratureNorm) {
  for (auto [a, b] : std::vector<std::pair<Rational, Rational>>{{0, 0}, {rational(5, 2), rational(3, 2)}, {rational(1, 3), rational(2, 7)}}) {
    QuadratureRule r = gauss_jacobi(30, a.get_d(), b.get_d());
    for (int n = 0; n <= 12; ++n) {
      const double norm2 = r.integrate([&](double x) {
        const double v = jacobi_real(n, a.get_d(), b.get_d(), x);
        return v * v;
      });
      const double l = orthonormalizer({n, a, b});
      EXPECT_NEAR(l * l * norm2, 1.0, 1e-10);
    }
  }
}

TEST(Bounds, PolyaHoldsOnGrid) {
  for (int n = 1; n <= 50; ++n)
    for (int i = 0; i <= 198; ++i) {
      const double x = -0.99 + 0.01 * i;
      const double p = legendre_real(n, x);
      EXPECT_LT(p * p, polya_bound(n, x)) << n << " " << x;
    }
}

TEST(Bounds, NemHoldsOnGrid) {
  const std::vector<double> grid{-0.5, 0.0, 0.5, 1.5, 3.0, 6.0, 10.0};
  for (double a : grid)
    for (double b : grid) {
      const JacobiParams base{0, parse_rational(std::to_string(a)), parse_rational(std::to_string(b))};
      const double bound = nem_bound(base);
      for (int n = 0; n <= 30; ++n) {
        JacobiParams p = base;
        p.n = n;
        const double l = orthonormalizer(p);
        double worst = 0.0;
        for (int i = 0; i <= 2000; ++i) {
          const double x = -1.0 + 2.0 * i / 2000.0;
          const double w = std::pow(1.0 - x, a) * std::pow(1.0 + x, b);
          const double v = l * jacobi_real(n, a, b, x);
          const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
          if (s > 0.0) worst = std::max(worst, s * w * v * v);
        }
        EXPECT_LE(worst, bound + 1e-9) << a << " " << b << " " << n;
      }
    }
}

TEST(Bounds, KoornwinderMatchesDirectRatio) {
  const std::vector<std::pair<Rational, Rational>> params{
      {rational(5, 2), rational(3, 2)}, {rational(7, 2), rational(1, 2)}, {3, 1}, {rational(19, 2), rational(5, 2)}};
  for (const auto& [a, b] : params)
    for (int n = 0; n <= 8; ++n)
      for (double x : {-1.0, -0.7, -0.2, 0.0, 0.3, 0.8, 1.0}) {
        const JacobiParams p{n, a, b};
        const double direct = jacobi_real(n, a.get_d(), b.get_d(), x) / jacobi_real(n, a.get_d(), b.get_d(), 1.0);
        const double k = koornwinder_ratio(p, x);
        EXPECT_NEAR(k, direct, 1e-6) << n << " " << x;
        EXPECT_LE(std::fabs(k), 1.0 + 1e-9);
      }
}

TEST(Bounds, KoornwinderRejectsAlphaNotAboveBeta) {
  EXPECT_THROW(koornwinder_ratio({2, rational(3, 2), rational(3, 2)}, 0.3), std::domain_error);
  EXPECT_THROW(koornwinder_ratio({2, 1, rational(-3, 4)}, 0.3), std::domain_error);
}

TEST(Bounds, ComparisonSideComposesFromOrthonormalBound) {
  // kappa^2 = b^{2 beta - 1} (P_n(x)/P_n(1))^2 <= C b^{2beta-1} / (l_n^2 sqrt(1-x^2) w(x) P_n(1)^2)
  for (auto [n, a, b, bb] : std::vector<std::tuple<int, Rational, Rational, double>>{
           {2, 20, rational(3, 2), 1.0 / 6.0}, {3, rational(5, 2), rational(3, 2), 0.5}, {1, rational(7, 2), rational(9, 2), 0.2}}) {
    const JacobiParams p{n, a, b};
    const BoundComparison c = markov_vs_nem_region(p, bb);
    const double x = -1.0 + 2.0 * bb * bb;
    const double ad = a.get_d(), bd = b.get_d();
    const double l = orthonormalizer(p);
    const double w = std::pow(1.0 - x, ad) * std::pow(1.0 + x, bd);
    const double p1 = jacobi_real(n, ad, bd, 1.0);
    const double want = nem_bound(p) * std::pow(bb, 2.0 * bd - 1.0) / (l * l * std::sqrt(1.0 - x * x) * w * p1 * p1);
    EXPECT_NEAR(c.nem_side / want, 1.0, 1e-10);
    EXPECT_NEAR(c.printed_side, c.nem_side * bb, 1e-15 + 1e-12 * c.nem_side);
    const double ratio = jacobi_real(n, ad, bd, x) / p1;
    EXPECT_NEAR(c.actual, std::pow(bb, 2.0 * bd - 1.0) * ratio * ratio, 1e-15);
    EXPECT_LE(c.actual, c.nem_side);
    EXPECT_EQ(c.trivial_wins, c.nem_side > 1.0);
  }
}

TEST(Bounds, DerivedSideBoundsKappaSquaredOnGrid) {
  for (int n = 0; n <= 6; ++n)
    for (int l = 0; l <= 6; ++l)
      for (Rational a : {rational(1, 2), rational(5, 2), Rational(7), Rational(20)})
        for (double b : {0.05, 1.0 / 6.0, 0.3, 0.5, 0.8}) {
          const BoundComparison c = markov_vs_nem_region({n, a, rational(2 * l + 1, 2)}, b);
          EXPECT_LE(c.actual, c.nem_side * (1.0 + 1e-12));
          EXPECT_LE(c.actual, 1.0 + 1e-12);
        }
}

TEST(Bounds, TrivialBoundWinsInStirlingRegion) {
  // 2n+1 < alpha < beta with b (1-b^2)^{alpha+1/2} small
  for (auto [a, b] : std::vector<std::pair<Rational, Rational>>{{6, rational(15, 2)}, {10, rational(25, 2)}, {rational(13, 2), rational(41, 2)}}) {
    const BoundComparison c = markov_vs_nem_region({2, a, b}, 1e-12);
    ASSERT_TRUE(c.stirling_lower.has_value());
    EXPECT_LE(*c.stirling_lower, c.nem_side);
    EXPECT_GT(*c.stirling_lower, 1.0);
    EXPECT_TRUE(c.trivial_wins);
  }
}

TEST(Bounds, InvalidInputsAreRejected) {
  EXPECT_THROW(polya_bound(0, 0.1), std::invalid_argument);
  EXPECT_THROW(polya_bound(3, 1.0), std::domain_error);
  EXPECT_THROW(nem_bound({2, rational(-3, 4), 0}), std::domain_error);
  EXPECT_THROW(markov_vs_nem_region({2, 3, 1}, 1.0), std::domain_error);
  EXPECT_THROW(jacobi_exact({-1, 0, 0}, Rational(0)), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "kacgap/qspec.hpp"
#include "kacgap/quadrature.hpp"

using namespace kacgap;

namespace {

// Qf(s) by direct quadrature over the scattering direction of every pair.
// Exact for polynomial observables of degree <= 4 once the rule has enough nodes.
double q_by_quadrature(const FunctionDescriptor& f, const VelocityState& s, const ScatteringKernel& k) {
  // nodes in the cosine with weights summing to 1 under b(s)/2
  std::vector<double> cs, ws;
  const int m = 16;
  const double a = k.alpha().get_d();
  if (k.is_power_type()) {
    QuadratureRule r = gauss_jacobi(m, -a, 0.0);
    const double c = 0.5 * (1.0 - a) * std::pow(2.0, a);
    cs = r.nodes;
    for (double w : r.weights) ws.push_back(c * w);
  } else {
    // half-power kernels: (a+1) s^a on [0,1]
    QuadratureRule r = gauss_legendre(m, 0.0, 1.0);
    cs = r.nodes;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) ws.push_back(r.weights[i] * (a + 1.0) * std::pow(r.nodes[i], a));
  }
  const int az = 12;
  const int N = s.N();
  double total = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const Eigen::Vector3d d = s.v[i] - s.v[j];
      const double r = 0.5 * d.norm();
      const Eigen::Vector3d e = d.normalized();
      const Eigen::Vector3d c = 0.5 * (s.v[i] + s.v[j]);
      const Eigen::Vector3d helper = std::fabs(e.x()) < 0.6 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
      const Eigen::Vector3d u1 = e.cross(helper).normalized(), u2 = e.cross(u1);
      double pair = 0.0;
      for (std::size_t q = 0; q < cs.size(); ++q) {
        const double sn = std::sqrt(std::max(0.0, 1.0 - cs[q] * cs[q]));
        for (int t = 0; t < az; ++t) {
          const double phi = 2.0 * std::numbers::pi * t / az;
          const Eigen::Vector3d sig = cs[q] * e + sn * (std::cos(phi) * u1 + std::sin(phi) * u2);
          VelocityState after = s;
          after.v[i] = c + r * sig;
          after.v[j] = c - r * sig;
          pair += ws[q] * evaluate(f, after) / az;
        }
      }
      total += pair;
    }
  return total * 2.0 / (static_cast<double>(N) * (N - 1));
}

const std::vector<FunctionDescriptor>& eigen_descriptors(int N) {
  static std::vector<FunctionDescriptor> three{FunctionDescriptor::sym11(0), FunctionDescriptor::sym02(0, 1),
                                              FunctionDescriptor::antisym01(1, 0, 1), FunctionDescriptor::antisym10(0, 2),
                                              FunctionDescriptor::v20_mode(1)};
  static std::vector<FunctionDescriptor> more{FunctionDescriptor::sym11(2), FunctionDescriptor::sym02(1, 2),
                                             FunctionDescriptor::antisym01(0, 1, 2), FunctionDescriptor::antisym10(0, 1),
                                             FunctionDescriptor::v20_mode(1), FunctionDescriptor::v20_mode(-1)};
  return N == 3 ? three : more;
}

}  // namespace

TEST(Surd, ExactSign) {
  EXPECT_EQ((Surd{3, -2, 2}).sign(), 1);   // 3 - 2 sqrt 2
  EXPECT_EQ((Surd{1, -1, 2}).sign(), -1);  // 1 - sqrt 2
  EXPECT_EQ((Surd{-3, 2, 2}).sign(), -1);
  EXPECT_EQ((Surd{2, -1, 4}).sign(), 0);
  EXPECT_EQ(compare(Surd{7, 1, 5}, Surd{9, 0, 0}), 1);  // 7 + sqrt 5 > 9
  EXPECT_EQ((Surd{0, 1, 5}).to_string(), "sqrt(5)");
  EXPECT_EQ((Surd{1, rational(-1, 2), 5}).to_string(), "1 - 1/2*sqrt(5)");
}

TEST(QSpec, SubspaceEigenvalues) {
  const KernelMoments u = moments(ScatteringKernel::uniform());
  const QSubspaceSpectrum s11 = q_subspace_spectrum(1, 1, 5, u);
  EXPECT_EQ(s11.eigenvalues.at(0).value.exact(), rational(5, 6));
  for (int N = 3; N <= 10; ++N) {
    const KernelMoments m = moments(ScatteringKernel::morgenstern());
    const Rational lam1 = 1 - (1 - m.b1.exact()) / (N - 1);
    const Rational lam02 = 1 - 3 * (1 - m.b2.exact()) / (2 * (N - 1));
    EXPECT_EQ(q_subspace_spectrum(0, 1, N, m).eigenvalues.at(0).value.exact(), lam1);
    EXPECT_EQ(q_subspace_spectrum(1, 0, N, m).eigenvalues.at(0).value.exact(), lam1);
    EXPECT_EQ(q_subspace_spectrum(0, 2, N, m).eigenvalues.at(0).value.exact(), lam02);
    EXPECT_EQ(q_subspace_spectrum(1, 1, N, m).eigenvalues.at(0).generator.exact(), N * (1 - m.b2.exact()) / (N - 1));
  }
  EXPECT_TRUE(q_subspace_spectrum(2, 0, 3, u).degenerate);
  EXPECT_THROW(q_subspace_spectrum(3, 0, 5, u), std::invalid_argument);
}

TEST(QSpec, V20BlockIdentities) {
  for (int N = 4; N <= 12; ++N) {
    const V20Block b = v20_block(N, moments(ScatteringKernel::uniform()));
    EXPECT_TRUE(b.trace_matches);
    EXPECT_TRUE(b.determinant_matches);
    EXPECT_GT(b.q_eigenvalues[0].value.approx(), b.q_eigenvalues[1].value.approx());
  }
  EXPECT_THROW(v20_block(3, moments(ScatteringKernel::uniform())), std::domain_error);
}

TEST(QSpec, DiracKernelIsIdentity) {
  CounterRng rng(3, 0);
  for (int N : {3, 6}) {
    for (int t = 0; t < 20; ++t) {
      const VelocityState s = sample_state(N, rng);
      for (const auto& f : eigen_descriptors(N)) EXPECT_NEAR(apply_q_pointwise(f, s, 1.0, 1.0), evaluate(f, s), 1e-13);
      for (const auto& f : {FunctionDescriptor::sum_quartic(), FunctionDescriptor::pair_dot_squared()})
        EXPECT_NEAR(apply_q_pointwise(f, s, 1.0, 1.0), evaluate(f, s), 1e-13);
    }
  }
}

TEST(QSpec, ClosedFormsMatchDirectQuadrature) {
  CounterRng rng(11, 0);
  for (const char* sel : {"uniform", "morgenstern", "halfpower:1"}) {
    const ScatteringKernel k = ScatteringKernel::parse(sel);
    for (int N : {3, 4, 7}) {
      for (int t = 0; t < 5; ++t) {
        const VelocityState s = sample_state(N, rng);
        std::vector<FunctionDescriptor> fs = eigen_descriptors(N);
        fs.push_back(FunctionDescriptor::sum_quartic());
        fs.push_back(FunctionDescriptor::pair_dot_squared());
        for (const auto& f : fs) EXPECT_NEAR(apply_q_pointwise(f, s, k), q_by_quadrature(f, s, k), 1e-12) << sel << " " << f.name();
      }
    }
  }
}

TEST(QSpec, EigenDescriptorResiduals) {
  CounterRng rng(5, 0);
  for (const char* sel : {"uniform", "morgenstern", "halfpower:1"}) {
    const ScatteringKernel k = ScatteringKernel::parse(sel);
    const KernelMoments m = moments(k);
    for (int N = 3; N <= 10; ++N)
      for (int t = 0; t < 40; ++t) {
        const VelocityState s = sample_state(N, rng);
        for (const auto& f : eigen_descriptors(N)) {
          const double lam = *descriptor_eigenvalue(f, N, m.b1.approx(), m.b2.approx());
          const double fv = evaluate(f, s);
          const double scale = std::max(std::fabs(fv), 1e-3);
          EXPECT_LT(std::fabs(apply_q_pointwise(f, s, k) - lam * fv) / scale, 1e-9) << sel << " " << f.name() << " " << N;
        }
      }
  }
}

TEST(QSpec, DescriptorEigenvaluesMatchSubspaceSpectrum) {
  for (const char* sel : {"uniform", "morgenstern", "halfpower:1/2"}) {
    const KernelMoments m = moments(ScatteringKernel::parse(sel));
    for (int N = 4; N <= 9; ++N) {
      const V20Block b = v20_block(N, m);
      EXPECT_NEAR(*descriptor_eigenvalue(FunctionDescriptor::v20_mode(1), N, m.b1.approx(), m.b2.approx()), b.q_eigenvalues[0].value.approx(), 1e-14);
      EXPECT_NEAR(*descriptor_eigenvalue(FunctionDescriptor::v20_mode(-1), N, m.b1.approx(), m.b2.approx()), b.q_eigenvalues[1].value.approx(), 1e-14);
      EXPECT_NEAR(*descriptor_eigenvalue(FunctionDescriptor::sym02(), N, m.b1.approx(), m.b2.approx()),
                  q_subspace_spectrum(0, 2, N, m).eigenvalues[0].value.approx(), 1e-14);
    }
  }
}

TEST(QSpec, AffineImagesOfQuarticObservables) {
  CounterRng rng(9, 0);
  for (int N : {3, 5, 8}) {
    const ScatteringKernel k = ScatteringKernel::morgenstern();
    const double B2 = moments(k).b2.approx();
    const AffineImage ip = q_phi_affine(N, B2), is = q_psi_affine(N, B2);
    for (int t = 0; t < 20; ++t) {
      const VelocityState s = sample_state(N, rng);
      const double phi = evaluate(FunctionDescriptor::sum_quartic(), s), psi = evaluate(FunctionDescriptor::pair_dot_squared(), s);
      EXPECT_NEAR(apply_q_pointwise(FunctionDescriptor::sum_quartic(), s, k), ip.constant + ip.phi * phi + ip.psi * psi, 1e-13);
      EXPECT_NEAR(apply_q_pointwise(FunctionDescriptor::pair_dot_squared(), s, k), is.constant + is.phi * phi + is.psi * psi, 1e-13);
      if (N == 3) EXPECT_NEAR(psi, 2.0 * phi - 0.5, 1e-13);
    }
  }
}

TEST(QSpec, MeanOfQuarticMatchesBetaLaw) {
  // N |v_1|^2 / (N-1) ~ Beta(3/2, 3(N-2)/2) under the uniform law
  for (int N = 3; N <= 20; ++N) {
    const Rational a = rational(3, 2), b = rational(3 * (N - 2), 2);
    const Rational eu2 = a * (a + 1) / ((a + b) * (a + b + 1));
    const Rational scale = rational(N - 1, N);
    EXPECT_EQ(mean_sum_quartic(N), N * scale * scale * eu2);
  }
}

TEST(QSpec, MeansMatchSampling) {
  CounterRng rng(21, 0);
  for (int N : {3, 6}) {
    const int n = 200000;
    double s1 = 0.0, q1 = 0.0, s2 = 0.0, q2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const VelocityState s = sample_state(N, rng);
      const double phi = evaluate(FunctionDescriptor::sum_quartic(), s), psi = evaluate(FunctionDescriptor::pair_dot_squared(), s);
      s1 += phi;
      q1 += phi * phi;
      s2 += psi;
      q2 += psi * psi;
    }
    const double m1 = s1 / n, m2 = s2 / n;
    EXPECT_LT(std::fabs(m1 - mean_sum_quartic(N).get_d()), 5.0 * std::sqrt((q1 / n - m1 * m1) / n));
    EXPECT_LT(std::fabs(m2 - mean_pair_dot_squared(N).get_d()), 5.0 * std::sqrt((q2 / n - m2 * m2) / n));
  }
}

TEST(QSpec, DescriptorParsing) {
  for (const char* name : {"const", "phi", "psi", "sym11", "sym02", "antisym01", "antisym10", "v20+", "v20-"})
    EXPECT_EQ(FunctionDescriptor::parse(name).name(), name);
  EXPECT_THROW(FunctionDescriptor::parse("energy"), std::invalid_argument);
  EXPECT_THROW(FunctionDescriptor::v20_mode(-1).validate(3), std::invalid_argument);
  EXPECT_THROW(FunctionDescriptor::antisym01(0, 1, 1).validate(4), std::invalid_argument);
  EXPECT_FALSE(FunctionDescriptor::sum_quartic().centered());
  EXPECT_TRUE(FunctionDescriptor::sym11().centered());
}

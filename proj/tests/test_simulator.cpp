#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <array>
#include <cmath>

#include "kacgap/qspec.hpp"
#include "kacgap/simulator.hpp"

using namespace kacgap;

TEST(Philox, KnownAnswers) {
  using B = CounterRng::Block;
  const B zero = CounterRng::philox({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(zero, (B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  const B ones = CounterRng::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones, (B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  const B pi = CounterRng::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi, (B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreReproducible) {
  CounterRng a(42, 3), b(42, 3), c(42, 4);
  for (int i = 0; i < 100; ++i) {
    const double x = uniform01(a);
    EXPECT_EQ(x, uniform01(b));
    EXPECT_NE(x, uniform01(c));
  }
}

TEST(Collision, ConservesMomentumAndEnergy) {
  CounterRng rng(1, 0);
  for (const char* sel : {"uniform", "morgenstern", "halfpower:1"}) {
    const ScatteringKernel k = ScatteringKernel::parse(sel);
    VelocityState s = sample_state(6, rng);
    for (int t = 0; t < 1000; ++t) {
      collision_step_inplace(s, k, rng);
      ASSERT_LT(s.momentum_error(), 1e-13);
      ASSERT_LT(s.energy_error(), 1e-13);
    }
  }
}

TEST(Collision, TwoParticlesStayOpposite) {
  CounterRng rng(2, 0);
  VelocityState s = sample_state(2, rng);
  for (int t = 0; t < 50; ++t) {
    collision_step_inplace(s, ScatteringKernel::uniform(), rng);
    EXPECT_NEAR((s.v[0] + s.v[1]).norm(), 0.0, 1e-14);
    EXPECT_NEAR(s.v[0].norm(), std::sqrt(0.5), 1e-13);
  }
}

TEST(Collision, DriftOverLongRuns) {
  for (auto [cadence, tol] : std::array<std::pair<long, double>, 2>{{{10000, 1e-9}, {0, 1e-6}}}) {
    CounterRng rng(3, 0);
    KacWalk w(sample_state(8, rng), ScatteringKernel::uniform(), rng, cadence);
    w.run(10000000);
    EXPECT_LT(w.state().momentum_error(), tol) << cadence;
    EXPECT_LT(w.state().energy_error(), tol) << cadence;
  }
}

TEST(Collision, MarginalOfOneVelocityAfterMixing) {
  // N |v_1|^2 / (N-1) ~ Beta(3/2, 3(N-2)/2) under the invariant law
  const int N = 5, walks = 20000, bins = 20;
  const double a = 1.5, b = 1.5 * (N - 2);
  std::array<int, bins> counts{};
  for (int w = 0; w < walks; ++w) {
    VelocityState s;
    s.v.assign(N, Eigen::Vector3d::Zero());
    const double x = std::sqrt(0.5);
    s.v[0] = {x, 0, 0};
    s.v[1] = {-x, 0, 0};
    KacWalk walk(s, ScatteringKernel::morgenstern(), CounterRng(4, w), 100);
    walk.run(1000);
    const double u = N * walk.state().v[0].squaredNorm() / (N - 1);
    counts[std::min(bins - 1, static_cast<int>(boost::math::ibeta(a, b, std::min(u, 1.0)) * bins))]++;
  }
  double chi2 = 0.0;
  const double expect = static_cast<double>(walks) / bins;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  const boost::math::chi_squared dist(bins - 1);
  EXPECT_LT(chi2, boost::math::quantile(boost::math::complement(dist, 0.001)));
}

TEST(Rayleigh, MatchesEigenvalues) {
  for (const char* sel : {"uniform", "halfpower:1"}) {
    const ScatteringKernel k = ScatteringKernel::parse(sel);
    const KernelMoments m = moments(k);
    for (int N : {4, 9}) {
      for (const auto& f : {FunctionDescriptor::sym11(), FunctionDescriptor::antisym01()}) {
        const RayleighEstimate r = rayleigh_estimate(f, N, k, 200000, 17, 2, 8);
        const double want = *descriptor_eigenvalue(f, N, m.b1.approx(), m.b2.approx());
        EXPECT_LT(std::fabs(r.estimate - want), 4.0 * r.std_error + 1e-12) << sel << " " << N << " " << f.name();
      }
    }
  }
  EXPECT_THROW(rayleigh_estimate(FunctionDescriptor::constant(), 5, ScatteringKernel::uniform(), 100, 1, 1, 1),
               std::invalid_argument);
}

TEST(Rayleigh, Sym11IsLargestForFirstTheoremKernels) {
  for (const char* sel : {"uniform", "morgenstern"}) {
    const KernelMoments m = moments(ScatteringKernel::parse(sel));
    for (int N : {5, 10}) {
      const double s11 = *descriptor_eigenvalue(FunctionDescriptor::sym11(), N, m.b1.approx(), m.b2.approx());
      for (const auto& f : {FunctionDescriptor::sym02(), FunctionDescriptor::antisym01(), FunctionDescriptor::antisym10(),
                            FunctionDescriptor::v20_mode(1), FunctionDescriptor::v20_mode(-1)})
        EXPECT_LT(*descriptor_eigenvalue(f, N, m.b1.approx(), m.b2.approx()), s11) << f.name();
    }
  }
}

TEST(Rayleigh, IndependentOfThreadCount) {
  const ScatteringKernel k = ScatteringKernel::uniform();
  const RayleighEstimate a = rayleigh_estimate(FunctionDescriptor::sym11(), 6, k, 20000, 5, 1, 8);
  const RayleighEstimate b = rayleigh_estimate(FunctionDescriptor::sym11(), 6, k, 20000, 5, 4, 8);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
}

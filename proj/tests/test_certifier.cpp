#include <gtest/gtest.h>

#include "kacgap/certifier.hpp"

using namespace kacgap;

namespace {

// Printed closed form of kappa_{2,2}(N).
Rational kappa22_printed(long N) {
  return Rational(21 * N * N * N - 60 * N * N + 27 * N - 4) / (Rational(3 * N - 4) * rpow(Rational(N - 1), 6));
}

Rational symmetric_lift(const Rational& k, int N) { return (1 + (N - 1) * k) / N; }

}  // namespace

TEST(Certifier, UniformGapFormula) {
  const GapCertificate c = certify_theorem1(ScatteringKernel::uniform(), 20, 1);
  EXPECT_EQ(c.verdict, "certified");
  EXPECT_EQ(c.base.value.exact(), Rational(2));
  ASSERT_EQ(c.records.size(), 18u);
  for (const auto& r : c.records) {
    EXPECT_TRUE(r.dich.exact) << r.N;
    EXPECT_EQ(r.dich.branch, "upper-bound-matches");
    EXPECT_EQ(r.delta.exact(), rational(2, 3) * rational(r.N, r.N - 1)) << r.N;
    EXPECT_EQ(r.eigenspace, std::vector<std::string>{"Sym11"});
  }
  EXPECT_EQ(c.records[0].delta.exact(), Rational(1));
  EXPECT_EQ(c.records[1].delta.exact(), rational(8, 9));
}

TEST(Certifier, MorgensternGapFormula) {
  const GapCertificate c = certify_theorem1(ScatteringKernel::morgenstern(), 16, 1);
  EXPECT_EQ(c.verdict, "certified");
  for (const auto& r : c.records) EXPECT_EQ(r.delta.exact(), rational(8, 15) * rational(r.N, r.N - 1)) << r.N;
}

TEST(Certifier, HalfPowerNeedsSecondTheorem) {
  for (const Rational& a : {Rational(0), rational(1, 2), Rational(1)}) {
    const ScatteringKernel k = ScatteringKernel::half_power(a);
    const GapCertificate t1 = certify_theorem1(k, 8, 1);
    EXPECT_EQ(t1.verdict, "inconclusive");
    EXPECT_NE(t1.reason.find("B2 > B1"), std::string::npos);
    const GapCertificate c = certify(k, TheoremChoice::Auto, 14, 1);
    EXPECT_EQ(c.theorem, "T2");
    EXPECT_EQ(c.verdict, "certified") << c.reason;
    const Rational b1 = (a + 1) / (a + 2);
    EXPECT_EQ(c.moments.b1.exact(), b1);
    for (const auto& r : c.records) {
      if (r.N < 7) continue;
      EXPECT_TRUE(r.dich.exact) << r.N;
      EXPECT_EQ(r.delta.exact(), (1 - b1) * rational(r.N, r.N - 1)) << r.N;
      EXPECT_EQ(r.eigenspace, (std::vector<std::string>{"Antisym01", "Antisym10"}));
    }
    ASSERT_TRUE(c.product_used.has_value());
    EXPECT_GT(*c.product_used, rational(10, 9));
  }
}

TEST(Certifier, ProductFromPrintedClosedForms) {
  Rational p = 1;
  for (int j = 4; j <= 7; ++j) p *= (1 - symmetric_lift(kappa22_printed(j), j)) / (1 - symmetric_lift(rational(1, (j - 1) * (j - 1)), j));
  EXPECT_EQ(p, rational(558018643, 495720000));
  EXPECT_EQ(twotwo_product(), p);
  EXPECT_GT(p, rational(10, 9));
  EXPECT_EQ(1 - mu22(3), rational(9, 20));
}

TEST(Certifier, TelescopingIdentity) {
  EXPECT_TRUE(telescoping_identity_check(60));
  EXPECT_THROW(telescoping_identity_check(3), std::invalid_argument);
}

TEST(Certifier, RecursionAndTrialBound) {
  EXPECT_EQ(recursion_step(Quantity(2), rational(1, 2), 3).exact(), rational(3, 2));
  EXPECT_THROW(recursion_step(Quantity(2), Rational(1), 3), std::invalid_argument);
  EXPECT_THROW(recursion_step(Quantity(2), rational(1, 2), 2), std::invalid_argument);
  EXPECT_EQ(trial_upper_bound(moments(ScatteringKernel::uniform()), 3).exact(), Rational(1));
  EXPECT_EQ(trial_upper_bound(moments(ScatteringKernel::half_power(0)), 4).exact(), rational(2, 3));
}

TEST(Certifier, QuantityParsing) {
  EXPECT_TRUE(quantity_from_string("2/3").is_exact());
  EXPECT_EQ(quantity_from_string("2/3").exact(), rational(2, 3));
  EXPECT_FALSE(quantity_from_string("0.5").is_exact());
  EXPECT_DOUBLE_EQ(quantity_from_string("1e-3").approx(), 1e-3);
}

TEST(Certificate, UntouchedCertificateChecks) {
  const nlohmann::json j = to_json(certify_theorem1(ScatteringKernel::uniform(), 10, 1));
  EXPECT_EQ(j.at("format"), "kacgap-certificate/1");
  const CertificateCheck r = check_certificate(nlohmann::json::parse(canonical_dump(j)), 1);
  EXPECT_TRUE(r.ok) << r.message;
  const nlohmann::json h = to_json(certify(ScatteringKernel::half_power(rational(1, 2)), TheoremChoice::T2, 9, 1));
  EXPECT_TRUE(check_certificate(h, 1).ok);
}

TEST(Certificate, TamperedRecordIsNamed) {
  const nlohmann::json j = to_json(certify_theorem1(ScatteringKernel::uniform(), 10, 1));
  nlohmann::json t = j;
  t["records"][2]["delta_N"] = "3/4";
  CertificateCheck r = check_certificate(t, 1);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.failing_record, "N=5");

  t = j;
  t["records"][4]["mu_star"] = "1/5";
  r = check_certificate(t, 1);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.failing_record, "N=7");

  t = j;
  t["base"]["delta_2"] = "3";
  r = check_certificate(t, 1);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.failing_record, "N=3");

  t = j;
  t["format"] = "other";
  EXPECT_FALSE(check_certificate(t, 1).ok);
}

TEST(Certificate, InconclusiveCannotBeRelabelled) {
  nlohmann::json j = to_json(certify_theorem1(ScatteringKernel::half_power(1), 8, 1));
  ASSERT_EQ(j.at("verdict"), "inconclusive");
  j["verdict"] = "certified";
  EXPECT_FALSE(check_certificate(j, 1).ok);
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(KACGAP_CLI) + " " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, CertifyThenCheck) {
  const std::string cert = ::testing::TempDir() + "uniform_cert.json";
  const CliResult c = run("--threads 2 -o " + cert + " certify --kernel uniform --theorem 1 --Nmax 50");
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_NE(slurp(cert).find("\"verdict\": \"certified\""), std::string::npos);
  const CliResult k = run("--threads 2 check " + cert);
  EXPECT_EQ(k.code, 0) << k.out;
  std::remove(cert.c_str());
}

TEST(Cli, TamperedCertificateIsRejected) {
  const std::string cert = ::testing::TempDir() + "tamper_cert.json";
  ASSERT_EQ(run("-o " + cert + " certify --kernel uniform --theorem 1 --Nmax 8").code, 0);
  std::string text = slurp(cert);
  const std::string needle = "\"delta_N\": \"5/6\"";
  const auto pos = text.find(needle);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, needle.size(), "\"delta_N\": \"6/7\"");
  std::ofstream(cert) << text;
  const CliResult k = run("check " + cert);
  EXPECT_EQ(k.code, 1);
  EXPECT_NE(k.out.find("N=5"), std::string::npos) << k.out;
  std::remove(cert.c_str());
}

TEST(Cli, HatKappaTableMatchesFixture) {
  const CliResult r = run("--format table table-hatkappa --N 3");
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream fx(std::string(KACGAP_FIXTURES) + "/hatkappa_table_N3.txt");
  std::istringstream got(r.out);
  std::string header;
  std::getline(got, header);
  int n1, l1, n2, l2;
  double v1, v2;
  int rows = 0;
  while (fx >> n1 >> l1 >> v1) {
    ASSERT_TRUE(got >> n2 >> l2 >> v2);
    EXPECT_EQ(n1, n2);
    EXPECT_EQ(l1, l2);
    EXPECT_NEAR(v1, v2, 5e-5) << n1;
    ++rows;
  }
  EXPECT_EQ(rows, 67);
  // stated table, column-aligned
  const CliResult f = run("--format table --paper-fixtures table-hatkappa --N 3");
  std::istringstream stated(f.out), fixture(slurp(std::string(KACGAP_FIXTURES) + "/hatkappa_table_N3.txt"));
  std::getline(stated, header);
  std::string a, b;
  while (fixture >> a) {
    ASSERT_TRUE(stated >> b);
    EXPECT_EQ(a, b);
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("certify --Nmax 5").code, 1);
  EXPECT_EQ(run("delta2 --kernel gaussian").code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("verify-twotwo --N 5").code, 0);
  const CliResult tt = run("verify-twotwo --N 6");
  EXPECT_EQ(tt.code, 2);
  EXPECT_EQ(run("certify --kernel halfpower:1 --theorem 1 --Nmax 5").code, 2);
}

TEST(Cli, Delta2Json) {
  const CliResult r = run("--format json delta2 --kernel uniform");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"2\""), std::string::npos) << r.out;
}

TEST(Cli, SimulationIsReproducible) {
  const std::string args = "--seed 7 --threads 2 --format csv simulate --N 5 --kernel uniform --horizon 0.5 --observables sym11 --replicas 2000 --time-points 5";
  const CliResult a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const CliResult c = run("--seed 7 --threads 1 --format csv simulate --N 5 --kernel uniform --horizon 0.5 --observables sym11 --replicas 2000 --time-points 5");
  EXPECT_EQ(a.out, c.out);
}

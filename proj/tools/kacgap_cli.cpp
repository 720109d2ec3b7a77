#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kacgap/certifier.hpp"
#include "kacgap/correlation.hpp"
#include "kacgap/jacobi.hpp"
#include "kacgap/k_matrix.hpp"
#include "kacgap/kernel.hpp"
#include "kacgap/parallel.hpp"
#include "kacgap/pspec.hpp"
#include "kacgap/qspec.hpp"
#include "kacgap/reference_values.hpp"
#include "kacgap/simulator.hpp"

using nlohmann::json;
using namespace kacgap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInconclusive = 2;

// Tabular view of a result; json carries the full record.
struct Report {
  json data;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string raw_csv;  // overrides the csv rendering when set
  int exit_code = kExitOk;
};

struct Globals {
  std::string format = "json";
  std::string output;
  unsigned threads = 0;
  std::uint64_t seed = 1;
  bool stated_values = false;
};

std::string fmt(double x, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string render(const Report& r, const std::string& format) {
  if (format == "json") return r.data.dump(2) + "\n";
  std::ostringstream os;
  if (format == "csv") {
    if (!r.raw_csv.empty()) return r.raw_csv;
    for (std::size_t i = 0; i < r.header.size(); ++i) os << (i ? "," : "") << csv_field(r.header[i]);
    os << "\n";
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
      os << "\n";
    }
    return os.str();
  }
  std::vector<std::size_t> width(r.header.size(), 0);
  for (std::size_t i = 0; i < r.header.size(); ++i) width[i] = r.header[i].size();
  for (const auto& row : r.rows)
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      os << cells[i];
      if (i + 1 < cells.size()) os << std::string(width[i] - cells[i].size() + 2, ' ');
    }
    os << "\n";
  };
  line(r.header);
  for (const auto& row : r.rows) line(row);
  return os.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << text;
}

Report key_values(json data) {
  Report r;
  r.header = {"key", "value"};
  for (auto it = data.begin(); it != data.end(); ++it)
    r.rows.push_back({it.key(), it->is_string() ? it->get<std::string>() : it->dump()});
  r.data = std::move(data);
  return r;
}

Report stated_values() {
  Report r;
  r.header = {"key", "value", "tag"};
  json arr = json::array();
  for (const auto& s : reference::kStatedValues) {
    arr.push_back({{"key", s.key}, {"value", s.value}, {"tag", s.tag}});
    r.rows.push_back({std::string(s.key), std::string(s.value), std::string(s.tag)});
  }
  r.data = {{"stated_values", std::move(arr)}};
  return r;
}

// ---- subcommands ------------------------------------------------------------

Report cmd_delta2(const ScatteringKernel& k) {
  const KernelMoments m = moments(k);
  const Delta2Result d = delta2(k);
  const Theorem1Gate g = check_theorem1_condition(k);
  json j{{"kernel", k.id()},
         {"B1", m.b1.to_string()},
         {"B2", m.b2.to_string()},
         {"delta2", d.value.to_string()},
         {"lambda_max", d.lambda_max.to_string()},
         {"witness", d.witness},
         {"method", d.method},
         {"cutoff", d.cutoff},
         {"theorem1_condition", g.holds()}};
  if (d.method == "polya-cutoff") j["envelope_integral"] = d.envelope_integral;
  if (!g.holds()) j["theorem1_failed_clause"] = g.failed_clause();
  return key_values(std::move(j));
}

Report cmd_spectrum_k(int N, int max_level, bool oracle) {
  check_particle_count(N);
  if (max_level < 0) throw std::invalid_argument("--max-level must be nonnegative");
  Report r;
  r.header = {"n", "l", "level", "kappa", "approx", "multiplicity"};
  json rows = json::array();
  std::map<Rational, int> expected;
  for (int n = 0; 2 * n <= max_level; ++n)
    for (int l = 0; 2 * n + l <= max_level; ++l) {
      const KEigenvalue k = kappa(n, l, N);
      expected[k.value] += 2 * l + 1;
      rows.push_back({{"n", n}, {"l", l}, {"level", 2 * n + l}, {"kappa", k.value.get_str()},
                      {"approx", k.value.get_d()}, {"multiplicity", 2 * l + 1}});
      r.rows.push_back({std::to_string(n), std::to_string(l), std::to_string(2 * n + l), k.value.get_str(),
                        fmt(k.value.get_d()), std::to_string(2 * l + 1)});
    }
  r.data = {{"N", N}, {"max_level", max_level}, {"eigenvalues", std::move(rows)}};
  if (oracle) {
    const KMatrixOracle o = k_matrix_oracle(N, max_level);
    bool complete = true;
    for (const auto& b : o.blocks) complete = complete && b.complete;
    std::map<Rational, int> got;
    for (const auto& [v, mult] : o.eigenvalues()) got[v] = mult;
    const bool match = complete && got == expected;
    r.data["oracle"] = {{"dimension", o.basis.size()}, {"complete", complete}, {"matches", match}};
    if (!match) r.exit_code = kExitInconclusive;
  }
  return r;
}

Report cmd_verify_mono(int N, bool cells, unsigned threads) {
  const MonoReport m = verify_mono(N, threads);
  Report r;
  r.data = to_json(m, cells);
  r.header = {"n", "l", "method", "value"};
  for (const auto& c : m.scan.cells)
    r.rows.push_back({std::to_string(c.n), std::to_string(c.l), to_cstr(c.method), c.value.empty() ? fmt(c.approx) : c.value});
  if (!m.certified) r.exit_code = kExitInconclusive;
  return r;
}

Report cmd_table_hatkappa(int N, bool stated) {
  Report r;
  r.header = {"n", "l", "hat_kappa_sq"};
  json rows = json::array();
  if (stated) {
    if (N != 3) throw std::invalid_argument("the printed table exists only for N = 3");
    for (const auto& row : reference::kHatKappaTableN3) {
      rows.push_back({{"n", row.n}, {"l", row.l}, {"hat_kappa_sq", row.value}});
      r.rows.push_back({std::to_string(row.n), std::to_string(row.l), std::string(row.value)});
    }
  } else {
    check_particle_count(N);
    const Rational t = kappa22(N);
    const double t2 = t.get_d() * t.get_d();
    const Rational lstar = ell_star(N);
    for (int n = 3;; ++n) {
      const Rational rest = lstar - n;
      const int lo = rest > 0 ? static_cast<int>(ceil_q(rest).get_si()) : 0;
      const int cut = detail::find_hat_cut(n, lo, N, t2);
      const double v = kappa_hat_sq(n, cut, N).hat_kappa_sq;
      rows.push_back({{"n", n}, {"l", cut}, {"hat_kappa_sq", fmt(v, "%.5f")}});
      r.rows.push_back({std::to_string(n), std::to_string(cut), fmt(v, "%.5f")});
      if (cut == lo && Rational(n) >= lstar) break;
    }
  }
  r.data = {{"N", N}, {"threshold", kappa22(N).get_str()}, {"rows", std::move(rows)}};
  std::ostringstream os;
  for (const auto& row : r.rows) os << row[0] << " " << row[1] << " " << row[2] << "\n";
  r.raw_csv = os.str();
  return r;
}

Report cmd_spectrum_p(int N, const std::string& mu_star_text, unsigned threads) {
  const PSpectrum p = p_top_spectrum(N, parse_rational(mu_star_text), threads);
  Report r;
  r.data = to_json(p);
  r.header = {"n", "l", "symmetry", "mu", "approx", "eigenspace", "dimension"};
  for (const auto& e : p.entries)
    r.rows.push_back({std::to_string(e.source.n), std::to_string(e.source.l), to_cstr(e.symmetry), e.value.get_str(),
                      fmt(e.value.get_d()), to_cstr(e.space.kind), std::to_string(e.space.dimension)});
  return r;
}

Report cmd_verify_twotwo(int N, bool cells, unsigned threads) {
  const TwoTwoReport t = verify_twotwo(N, threads);
  Report r;
  r.data = to_json(t, cells);
  r.header = {"n", "l", "method", "value"};
  for (const auto& c : t.scan.cells)
    r.rows.push_back({std::to_string(c.n), std::to_string(c.l), to_cstr(c.method), c.value.empty() ? fmt(c.approx) : c.value});
  if (!t.certified) r.exit_code = kExitInconclusive;
  return r;
}

Report cmd_spectrum_q(int N, const ScatteringKernel& k) {
  const KernelMoments m = moments(k);
  Report r;
  r.header = {"n", "l", "label", "lambda", "approx", "generator"};
  json subs = json::array();
  std::optional<QEigenvalue> top;
  for (auto [n, l] : std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {1, 1}, {0, 2}, {2, 0}}) {
    const QSubspaceSpectrum s = q_subspace_spectrum(n, l, N, m);
    subs.push_back(to_json(s));
    for (const auto& e : s.eigenvalues) {
      r.rows.push_back({std::to_string(n), std::to_string(l), e.label, e.value.to_string(), fmt(e.value.approx()),
                        e.generator.to_string()});
      if (!top || compare(e.value, top->value) > 0) top = e;
    }
  }
  r.data = {{"N", N},
            {"kernel", k.id()},
            {"B1", m.b1.to_string()},
            {"B2", m.b2.to_string()},
            {"subspaces", std::move(subs)},
            {"largest", {{"label", top->label}, {"lambda", top->value.to_string()}, {"generator", top->generator.to_string()}}}};
  return r;
}

Report cmd_certify(const ScatteringKernel& k, const std::string& theorem, int n_max, unsigned threads) {
  TheoremChoice t;
  if (theorem == "1") t = TheoremChoice::T1;
  else if (theorem == "2") t = TheoremChoice::T2;
  else if (theorem == "auto") t = TheoremChoice::Auto;
  else throw std::invalid_argument("--theorem must be 1, 2 or auto");
  const GapCertificate c = certify(k, t, n_max, threads);
  Report r;
  r.data = to_json(c);
  r.header = {"N", "delta_N", "approx", "exact", "branch"};
  for (const auto& rec : c.records)
    r.rows.push_back({std::to_string(rec.N), rec.delta.to_string(), fmt(rec.delta.approx()),
                      rec.dich.exact ? "yes" : "no", rec.dich.branch});
  if (c.verdict != "certified") r.exit_code = kExitInconclusive;
  return r;
}

Report cmd_check(const std::string& path, unsigned threads) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open certificate '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("certificate '" + path + "' is not valid JSON: " + e.what());
  }
  const CertificateCheck c = check_certificate(j, threads);
  Report r = key_values({{"file", path}, {"ok", c.ok}, {"failing_record", c.failing_record}, {"message", c.message}});
  if (!c.ok) r.exit_code = kExitError;
  return r;
}

Report cmd_simulate(WalkConfig cfg, const std::string& observables) {
  std::vector<FunctionDescriptor> obs;
  std::stringstream ss(observables);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) obs.push_back(FunctionDescriptor::parse(item));
  const RelaxationResult res = relaxation_run(cfg, obs);
  Report r;
  r.data = to_json(res);
  r.raw_csv = to_csv(res);
  r.header = {"observable", "rate", "rate_se", "expected_rate", "r_squared", "warning"};
  for (std::size_t k = 0; k < res.fits.size(); ++k) {
    const DecayFit& f = res.fits[k];
    r.rows.push_back({res.observables[k], fmt(f.rate), fmt(f.rate_se), f.expected_rate ? fmt(*f.expected_rate) : "",
                      fmt(f.r_squared), f.warning});
  }
  return r;
}

Report cmd_bounds_jacobi(int n, const std::string& alpha, const std::string& beta, double b) {
  JacobiParams p{n, parse_rational(alpha), parse_rational(beta)};
  const BoundComparison c = markov_vs_nem_region(p, b);
  json j{{"n", n},
         {"alpha", p.alpha.get_str()},
         {"beta", p.beta.get_str()},
         {"b", b},
         {"nem_bound", nem_bound(p)},
         {"nem_side", c.nem_side},
         {"printed_side", c.printed_side},
         {"trivial_side", c.trivial_side},
         {"actual", c.actual},
         {"trivial_wins", c.trivial_wins}};
  if (c.stirling_lower) j["stirling_lower"] = *c.stirling_lower;
  return key_values(std::move(j));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral gap computations for the three-dimensional Kac walk"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv", "table"}));
  app.add_option("--output,-o", g.output, "Write output to this file instead of stdout");
  app.add_option("--threads", g.threads, "Worker threads (default: KACGAP_THREADS or logical cores)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--paper-fixtures", g.stated_values, "Emit only the stated reference values");

  std::string kernel_sel, theorem = "auto", mu_star, observables = "sym11", alpha, beta, cert_path;
  int N = 0, max_level = 4, n_max = 0, jn = 0;
  double b = 0.5;
  bool oracle = false, cells = false;
  std::optional<long> steps;
  std::optional<double> horizon;
  long replicas = 1000, cadence = 10'000;
  int time_points = 41;

  auto add_kernel = [&](CLI::App* s) {
    s->add_option("--kernel", kernel_sel, "uniform | morgenstern | power:A | halfpower:A | file:PATH")->required();
  };
  auto add_N = [&](CLI::App* s) { s->add_option("--N", N, "Number of particles")->required()->check(CLI::Range(3, 100000)); };

  auto* s_delta2 = app.add_subcommand("delta2", "Spectral gap of the two-particle walk");
  add_kernel(s_delta2);
  auto* s_k = app.add_subcommand("spectrum-k", "Eigenvalues of the correlation operator");
  add_N(s_k);
  s_k->add_option("--max-level", max_level, "Largest polynomial degree 2n+l")->check(CLI::NonNegativeNumber);
  s_k->add_flag("--oracle", oracle, "Cross-check against the explicit matrix of K (degree <= 6)");
  auto* s_mono = app.add_subcommand("verify-mono", "Check the monotonicity bound on kappa");
  add_N(s_mono);
  s_mono->add_flag("--cells", cells, "Include the per-cell record in JSON output");
  auto* s_hat = app.add_subcommand("table-hatkappa", "Cut points of the hat-kappa bound");
  s_hat->add_option("--N", N, "Number of particles")->required()->check(CLI::Range(3, 100000));
  auto* s_p = app.add_subcommand("spectrum-p", "Eigenvalues of P above a threshold");
  add_N(s_p);
  s_p->add_option("--mu-star", mu_star, "Threshold as p/q or decimal")->required();
  auto* s_tt = app.add_subcommand("verify-twotwo", "Check that mu_{2,2} is the largest lift with n+l > 2");
  add_N(s_tt);
  s_tt->add_flag("--cells", cells, "Include the per-cell record in JSON output");
  auto* s_q = app.add_subcommand("spectrum-q", "Eigenvalues of Q on the low-degree subspaces");
  add_N(s_q);
  add_kernel(s_q);
  auto* s_cert = app.add_subcommand("certify", "Produce a gap certificate");
  add_kernel(s_cert);
  s_cert->add_option("--theorem", theorem, "1, 2 or auto")->check(CLI::IsMember({"1", "2", "auto"}));
  s_cert->add_option("--Nmax", n_max, "Largest particle number")->required()->check(CLI::Range(3, 100000));
  auto* s_check = app.add_subcommand("check", "Verify a certificate file");
  s_check->add_option("certificate", cert_path, "Certificate JSON")->required();
  auto* s_sim = app.add_subcommand("simulate", "Relaxation run of the Kac walk");
  s_sim->add_option("--N", N, "Number of particles")->required()->check(CLI::Range(3, 100000));
  add_kernel(s_sim);
  auto* o_steps = s_sim->add_option("--steps", steps, "Expected collisions per replica (horizon = steps/N)");
  auto* o_horizon = s_sim->add_option("--horizon", horizon, "Continuous time per replica");
  o_steps->excludes(o_horizon);
  s_sim->add_option("--observables", observables, "Comma list of const, phi, psi, sym11, sym02, antisym01, antisym10, v20+, v20-");
  s_sim->add_option("--replicas", replicas, "Number of replicas")->check(CLI::PositiveNumber);
  s_sim->add_option("--cadence", cadence, "Re-projection period in collisions, 0 for never")->check(CLI::NonNegativeNumber);
  s_sim->add_option("--time-points", time_points, "Sampling times including t = 0")->check(CLI::Range(2, 100000));
  auto* s_bj = app.add_subcommand("bounds-jacobi", "Compare the orthonormal uniform bound on kappa^2 with the trivial bound 1");
  s_bj->add_option("--n", jn, "Degree")->required()->check(CLI::NonNegativeNumber);
  s_bj->add_option("--alpha", alpha, "alpha as p/q")->required();
  s_bj->add_option("--beta", beta, "beta as p/q")->required();
  s_bj->add_option("--b", b, "Correlation parameter in (0,1)");

  for (auto* s : app.get_subcommands({})) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    Report r;
    auto kernel = [&] { return ScatteringKernel::parse(kernel_sel); };
    if (g.stated_values && !s_hat->parsed()) {
      r = stated_values();
    } else if (s_delta2->parsed()) {
      r = cmd_delta2(kernel());
    } else if (s_k->parsed()) {
      r = cmd_spectrum_k(N, max_level, oracle);
    } else if (s_mono->parsed()) {
      r = cmd_verify_mono(N, cells, g.threads);
    } else if (s_hat->parsed()) {
      r = cmd_table_hatkappa(N, g.stated_values);
    } else if (s_p->parsed()) {
      r = cmd_spectrum_p(N, mu_star, g.threads);
    } else if (s_tt->parsed()) {
      r = cmd_verify_twotwo(N, cells, g.threads);
    } else if (s_q->parsed()) {
      r = cmd_spectrum_q(N, kernel());
    } else if (s_cert->parsed()) {
      r = cmd_certify(kernel(), theorem, n_max, g.threads);
    } else if (s_check->parsed()) {
      r = cmd_check(cert_path, g.threads);
    } else if (s_sim->parsed()) {
      if (!steps && !horizon) throw std::invalid_argument("simulate needs --steps or --horizon");
      WalkConfig cfg;
      cfg.N = N;
      cfg.kernel = kernel();
      cfg.steps = steps;
      cfg.horizon = horizon;
      cfg.cadence = cadence;
      cfg.seed = g.seed;
      cfg.replicas = replicas;
      cfg.time_points = time_points;
      cfg.threads = g.threads;
      r = cmd_simulate(cfg, observables);
    } else if (s_bj->parsed()) {
      r = cmd_bounds_jacobi(jn, alpha, beta, b);
    }
    const std::string text = (s_cert->parsed() && g.format == "json") ? canonical_dump(r.data) : render(r, g.format);
    emit(text, g.output);
    if (r.exit_code == kExitError && s_check->parsed())
      std::cerr << "check failed at record " << r.data.value("failing_record", std::string()) << ": "
                << r.data.value("message", std::string()) << "\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

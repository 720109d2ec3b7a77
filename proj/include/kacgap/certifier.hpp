#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kacgap/kernel.hpp"
#include "kacgap/pspec.hpp"
#include "kacgap/qspec.hpp"
#include "kacgap/rational.hpp"

namespace kacgap {

enum class TheoremChoice { T1, T2, Auto };

inline std::string quantity_str(const Quantity& q) { return q.to_string(); }

// Exact "p/q" strings stay exact; decimal strings become approximate values.
inline Quantity quantity_from_string(const std::string& s) {
  if (s.find_first_of(".eEni") != std::string::npos) return Quantity::approximate(std::stod(s));
  return Quantity(parse_rational(s));
}

// N/(N-1) (1 - mu*) delta_prev
inline Quantity recursion_step(const Quantity& delta_prev, const Rational& mu_star, int N) {
  if (N < 3) throw std::invalid_argument("recursion_step: N must be at least 3");
  if (mu_star >= 1) throw std::invalid_argument("recursion_step: mu_star must be below 1");
  return Quantity(Rational(rational(N, N - 1) * (1 - mu_star))) * delta_prev;
}

// Trial-function upper bound min{1-B1, 1-B2} N/(N-1).
inline Quantity trial_upper_bound(const KernelMoments& m, int N) {
  return qmin(Quantity(1) - m.b1, Quantity(1) - m.b2) * Quantity(rational(N, N - 1));
}

struct Dichotomy {
  int N = 3;
  Rational mu_star;
  std::vector<PEigenvalue> included;     // eigenvalues of P whose Q-invariant hull enters the max
  std::vector<PEigenvalue> at_threshold; // eigenvalues equal to mu_star with unknown hull
  std::vector<QEigenvalue> q_eigenvalues;
  std::optional<Quantity> q_gap;         // N (1 - max nu_j)
  Quantity recursion;                    // N/(N-1) (1 - mu*) delta_prev
  Quantity upper;                        // trial-function bound
  Quantity lower;                        // min(q_gap, recursion)
  bool exact = false;
  std::string branch;                    // "upper-bound-matches" or "recursion"
  std::string reason;                    // set when not exact
};

namespace detail {

inline std::optional<std::pair<int, int>> hull_label(const PEigenvalue& p) {
  switch (p.space.kind) {
    case EigenspaceKind::Antisym01: return std::pair{0, 1};
    case EigenspaceKind::Antisym10: return std::pair{1, 0};
    case EigenspaceKind::Sym02: return std::pair{0, 2};
    case EigenspaceKind::Sym11: return std::pair{1, 1};
    case EigenspaceKind::Sym20: return std::pair{2, 0};
    case EigenspaceKind::Other: return std::nullopt;
  }
  return std::nullopt;
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace detail

// Either Delta_N = N(1 - max nu_j) or Delta_N >= N/(N-1)(1-mu*)Delta_{N-1}; with the
// trial bound Delta_N <= U this pins Delta_N = U whenever both candidates reach U.
inline Dichotomy dichotomy(int N, const Rational& mu_star, const PSpectrum& p, const KernelMoments& m,
                           const Quantity& delta_prev) {
  Dichotomy d;
  d.N = N;
  d.mu_star = mu_star;
  d.upper = trial_upper_bound(m, N);
  d.recursion = recursion_step(delta_prev, mu_star, N);
  bool unknown_above = false;
  std::vector<std::pair<int, int>> hulls;
  for (const auto& e : p.entries) {
    auto h = detail::hull_label(e);
    if (h) {
      d.included.push_back(e);
      if (std::find(hulls.begin(), hulls.end(), *h) == hulls.end()) hulls.push_back(*h);
    } else if (e.value == mu_star) {
      d.at_threshold.push_back(e);
    } else {
      unknown_above = true;
      if (d.reason.empty())
        d.reason = "eigenvalue " + e.value.get_str() + " of P from (n,l)=(" + std::to_string(e.source.n) + "," +
                   std::to_string(e.source.l) + ") lies above mu* with no known Q-invariant hull";
    }
  }
  std::sort(hulls.begin(), hulls.end());
  for (auto [n, l] : hulls) {
    QSubspaceSpectrum qs = q_subspace_spectrum(n, l, N, m);
    for (auto& q : qs.eigenvalues) d.q_eigenvalues.push_back(q);
  }
  if (!unknown_above && !d.q_eigenvalues.empty()) {
    // Largest Q eigenvalue: within one moment family compare coefficients exactly.
    std::optional<QEigenvalue> best;
    for (const auto& q : d.q_eigenvalues) {
      if (!best) {
        best = q;
        continue;
      }
      int c;
      if (q.moment == best->moment) c = -compare(q.coefficient, best->coefficient);
      else c = compare(q.value, best->value);
      if (c > 0) best = q;
    }
    d.q_gap = best->generator;
  }
  if (d.q_gap) d.lower = qmin(*d.q_gap, d.recursion);
  else d.lower = Quantity(0);
  d.exact = d.q_gap && compare(d.lower, d.upper) >= 0;
  if (d.exact) {
    d.branch = "upper-bound-matches";
  } else {
    d.branch = "recursion";
    if (d.reason.empty()) {
      if (d.q_gap && compare(*d.q_gap, d.upper) < 0) {
        d.reason = "Q gap on the known hulls " + quantity_str(*d.q_gap) + " is below the trial bound " +
                   quantity_str(d.upper);
      } else {
        d.reason = "recursion bound " + quantity_str(d.recursion) + " is below the trial bound " +
                   quantity_str(d.upper) + " by " + detail::fmt_double((d.upper - d.recursion).approx());
      }
    }
    if (!d.q_gap) d.lower = Quantity(0);
  }
  return d;
}

struct GapRecord {
  int N = 3;
  std::string mu_star_source;
  Dichotomy dich;
  Quantity delta;  // exact gap when dich.exact, else the proved lower bound
  std::vector<std::string> eigenspace;
};

struct GapCertificate {
  std::string kernel;
  std::string theorem = "none";  // T1 | T2 | none
  int n_max = 3;
  KernelMoments moments;
  Delta2Result base;
  Theorem1Gate gate;
  std::vector<GapRecord> records;
  std::optional<Rational> product_mu22;  // prod_{j=4}^{7} (1 - mu22(j)) / (1 - mu02(j))
  std::optional<Rational> product_used;  // same with the thresholds actually used
  std::optional<Quantity> all_recursion_7;
  bool telescoping = false;
  std::string verdict = "inconclusive";
  std::string reason;
};

inline bool telescoping_identity_check(int n_max) {
  if (n_max < 4) throw std::invalid_argument("telescoping_identity_check: N_max must be at least 4");
  for (int n1 = 4; n1 <= n_max; ++n1) {
    Rational prod = rational(n1, 2);
    for (int j = 4; j <= n1; ++j) prod *= 1 - rational(1, j - 1);
    if (prod != rational(n1, n1 - 1)) return false;
  }
  return true;
}

inline Rational twotwo_product() {
  Rational p = 1;
  for (int j = 4; j <= 7; ++j) p *= (1 - mu22(j)) / (1 - mu02(j));
  return p;
}

namespace detail {

inline std::vector<std::string> gap_eigenspace(const KernelMoments& m) {
  int c = compare(m.b2, m.b1);
  if (c > 0) return {"Sym11"};
  if (c < 0) return {"Antisym01", "Antisym10"};
  return {"Sym11", "Antisym01", "Antisym10"};
}

inline GapRecord run_step(int N, const Rational& mu_star, std::string source, const KernelMoments& m,
                          const Quantity& delta_prev, unsigned threads) {
  GapRecord r;
  r.N = N;
  r.mu_star_source = std::move(source);
  PSpectrum p = p_top_spectrum(N, mu_star, threads);
  r.dich = dichotomy(N, mu_star, p, m, delta_prev);
  r.delta = r.dich.exact ? r.dich.upper : r.dich.lower;
  if (r.dich.exact) r.eigenspace = gap_eigenspace(m);
  return r;
}

inline void finish(GapCertificate& c, int first_exact_required) {
  if (!c.reason.empty()) {
    c.verdict = "inconclusive";
    return;
  }
  for (const auto& r : c.records) {
    if (r.N >= first_exact_required && !r.dich.exact) {
      c.verdict = "inconclusive";
      c.reason = "N=" + std::to_string(r.N) + ": " + r.dich.reason;
      return;
    }
  }
  c.verdict = "certified";
}

}  // namespace detail

inline GapCertificate certify_theorem1(const ScatteringKernel& k, int n_max, unsigned threads = 0) {
  if (n_max < 3) throw std::invalid_argument("certify: N_max must be at least 3");
  GapCertificate c;
  c.kernel = k.id();
  c.theorem = "T1";
  c.n_max = n_max;
  c.moments = moments(k);
  c.base = delta2(k);
  c.gate = check_theorem1_condition(k);
  c.telescoping = n_max >= 4 ? telescoping_identity_check(n_max) : true;
  if (!c.gate.holds()) c.reason = "precondition failed: " + c.gate.failed_clause();
  Quantity prev = c.base.value;
  for (int N = 3; N <= n_max; ++N) {
    Rational ms = (N == 3) ? mu22(3) : rational(1, N - 1);
    GapRecord r = detail::run_step(N, ms, N == 3 ? "mu22" : "1/(N-1)", c.moments, prev, threads);
    prev = r.delta;
    c.records.push_back(std::move(r));
  }
  detail::finish(c, 3);
  return c;
}

inline GapCertificate certify_theorem2(const ScatteringKernel& k, int n_max, unsigned threads = 0) {
  if (n_max < 7) throw std::invalid_argument("certify_theorem2: N_max must be at least 7");
  GapCertificate c;
  c.kernel = k.id();
  c.theorem = "T2";
  c.n_max = n_max;
  c.moments = moments(k);
  c.base = delta2(k);
  c.gate = check_theorem1_condition(k);
  c.telescoping = telescoping_identity_check(n_max);
  if (c.base.witness != 1)
    c.reason = "precondition failed: Delta2 witness degree is " + std::to_string(c.base.witness) + ", not 1";

  // Thresholds for N <= 7: the largest lift over n + l > 2.
  Rational used = 1;
  Quantity chain = c.base.value;
  Quantity prev = c.base.value;
  for (int N = 3; N <= n_max; ++N) {
    Rational ms;
    std::string source;
    if (N <= 7) {
      TwoTwoReport tt = verify_twotwo(N, threads);
      ms = tt.sup_mu;
      source = tt.certified ? "mu22" : "sup over n+l>2 at (" + std::to_string(tt.sup_cell.n) + "," +
                                           std::to_string(tt.sup_cell.l) + ")";
      chain = recursion_step(chain, ms, N);
      if (N >= 4) used *= (1 - ms) / (1 - mu02(N));
    } else {
      ms = rational(1, N - 1);
      source = "1/(N-1)";
    }
    GapRecord r = detail::run_step(N, ms, source, c.moments, prev, threads);
    prev = r.delta;
    c.records.push_back(std::move(r));
  }
  c.product_mu22 = twotwo_product();
  c.product_used = used;
  c.all_recursion_7 = chain;
  detail::finish(c, 7);
  return c;
}

inline GapCertificate certify(const ScatteringKernel& k, TheoremChoice t, int n_max, unsigned threads = 0) {
  if (t == TheoremChoice::T1) return certify_theorem1(k, n_max, threads);
  if (t == TheoremChoice::T2) return certify_theorem2(k, n_max, threads);
  if (check_theorem1_condition(k).holds()) return certify_theorem1(k, n_max, threads);
  if (delta2(k).witness == 1 && n_max >= 7) return certify_theorem2(k, n_max, threads);
  GapCertificate c = certify_theorem1(k, n_max, threads);
  c.theorem = "none";
  c.verdict = "inconclusive";
  if (c.reason.empty()) c.reason = "neither theorem applies";
  return c;
}

// ---- serialization ----------------------------------------------------------

inline nlohmann::json to_json(const GapRecord& r) {
  nlohmann::json p = nlohmann::json::array();
  for (const auto& e : r.dich.included) p.push_back(to_json(e));
  nlohmann::json at = nlohmann::json::array();
  for (const auto& e : r.dich.at_threshold) at.push_back(to_json(e));
  nlohmann::json q = nlohmann::json::array();
  for (const auto& e : r.dich.q_eigenvalues) q.push_back(to_json(e));
  nlohmann::json j{{"id", "N=" + std::to_string(r.N)},
                   {"N", r.N},
                   {"mu_star", r.dich.mu_star.get_str()},
                   {"mu_star_source", r.mu_star_source},
                   {"p_spectrum_above_star", std::move(p)},
                   {"p_spectrum_at_star", std::move(at)},
                   {"q_eigenvalues", std::move(q)},
                   {"q_gap_on_V", r.dich.q_gap ? nlohmann::json(quantity_str(*r.dich.q_gap)) : nlohmann::json(nullptr)},
                   {"recursion_bound", quantity_str(r.dich.recursion)},
                   {"upper_bound", quantity_str(r.dich.upper)},
                   {"lower_bound", quantity_str(r.dich.lower)},
                   {"branch_taken", r.dich.branch},
                   {"exact", r.dich.exact},
                   {"delta_N", quantity_str(r.delta)},
                   {"eigenspace", r.eigenspace}};
  if (!r.dich.exact) j["reason"] = r.dich.reason;
  return j;
}

inline nlohmann::json to_json(const GapCertificate& c) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : c.records) recs.push_back(to_json(r));
  nlohmann::json j{{"format", "kacgap-certificate/1"},
                   {"kernel", c.kernel},
                   {"theorem", c.theorem},
                   {"N_range", {3, c.n_max}},
                   {"moments", {{"B1", quantity_str(c.moments.b1)}, {"B2", quantity_str(c.moments.b2)}}},
                   {"base",
                    {{"id", "base"},
                     {"N", 2},
                     {"delta_2", quantity_str(c.base.value)},
                     {"witness", c.base.witness},
                     {"method", c.base.method},
                     {"cutoff", c.base.cutoff}}},
                   {"gate",
                    {{"B2_exceeds_B1", c.gate.b2_exceeds_b1},
                     {"delta2_condition", c.gate.delta2_condition},
                     {"rhs", quantity_str(c.gate.rhs)}}},
                   {"records", std::move(recs)},
                   {"telescoping_identity", c.telescoping},
                   {"verdict", c.verdict}};
  if (!c.reason.empty()) j["reason"] = c.reason;
  if (c.product_mu22) {
    j["product"] = {{"mu22_thresholds", c.product_mu22->get_str()},
                    {"thresholds_used", c.product_used->get_str()},
                    {"required_above", "10/9"},
                    {"all_recursion_bound_N7", quantity_str(*c.all_recursion_7)}};
  }
  return j;
}

inline std::string canonical_dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct CertificateCheck {
  bool ok = false;
  std::string failing_record;
  std::string message;
};

namespace detail {

inline CertificateCheck fail(std::string id, std::string msg) { return {false, std::move(id), std::move(msg)}; }

}  // namespace detail

// Replays every record from its stored values, then regenerates the certificate
// and compares record by record.
inline CertificateCheck check_certificate(const nlohmann::json& j, unsigned threads = 0) {
  try {
    if (j.value("format", "") != "kacgap-certificate/1") return detail::fail("header", "unknown format");
    const std::string kernel = j.at("kernel").get<std::string>();
    const std::string theorem = j.at("theorem").get<std::string>();
    const int n_max = j.at("N_range").at(1).get<int>();
    KernelMoments m{quantity_from_string(j.at("moments").at("B1").get<std::string>()),
                    quantity_from_string(j.at("moments").at("B2").get<std::string>())};
    Quantity prev = quantity_from_string(j.at("base").at("delta_2").get<std::string>());
    bool all_exact_from7 = true, all_exact = true;
    for (const auto& r : j.at("records")) {
      const std::string id = r.at("id").get<std::string>();
      const int N = r.at("N").get<int>();
      if (id != "N=" + std::to_string(N)) return detail::fail(id, "record id does not match N");
      const Rational ms = parse_rational(r.at("mu_star").get<std::string>());
      const Quantity rec = recursion_step(prev, ms, N);
      if (!(rec == quantity_from_string(r.at("recursion_bound").get<std::string>())) &&
          compare(rec, quantity_from_string(r.at("recursion_bound").get<std::string>())) != 0)
        return detail::fail(id, "recursion bound does not follow from the previous record");
      const Quantity up = trial_upper_bound(m, N);
      if (compare(up, quantity_from_string(r.at("upper_bound").get<std::string>())) != 0)
        return detail::fail(id, "trial upper bound does not match the stored moments");
      // q gap from the stored Q eigenvalues
      std::optional<Quantity> qgap;
      double best = -1e300;
      for (const auto& q : r.at("q_eigenvalues")) {
        Quantity lam = quantity_from_string(q.at("lambda").get<std::string>());
        if (!qgap || lam.approx() > best) {
          best = lam.approx();
          qgap = Quantity(N) * (Quantity(1) - lam);
        }
      }
      for (const auto& e : r.at("p_spectrum_above_star")) {
        Rational mu = parse_rational(e.at("mu").get<std::string>());
        if (mu < ms) return detail::fail(id, "stored P eigenvalue lies below mu*");
      }
      const bool exact = r.at("exact").get<bool>();
      if (r.at("q_gap_on_V").is_null()) {
        if (exact) return detail::fail(id, "exact branch claimed without a Q gap");
      } else {
        if (compare(*qgap, quantity_from_string(r.at("q_gap_on_V").get<std::string>())) != 0)
          return detail::fail(id, "Q gap does not match the stored Q eigenvalues");
        const Quantity lower = qmin(*qgap, rec);
        if (compare(lower, quantity_from_string(r.at("lower_bound").get<std::string>())) != 0)
          return detail::fail(id, "lower bound is not min(Q gap, recursion bound)");
        const bool should = compare(lower, up) >= 0;
        if (should != exact) return detail::fail(id, "branch decision does not follow from the stored values");
      }
      const Quantity delta = quantity_from_string(r.at("delta_N").get<std::string>());
      if (exact && compare(delta, up) != 0) return detail::fail(id, "delta_N differs from the trial bound");
      if (!exact && !r.at("q_gap_on_V").is_null() &&
          compare(delta, quantity_from_string(r.at("lower_bound").get<std::string>())) != 0)
        return detail::fail(id, "delta_N differs from the lower bound");
      if (!exact) {
        all_exact = false;
        if (N >= 7) all_exact_from7 = false;
      }
      prev = delta;
    }
    const std::string verdict = j.at("verdict").get<std::string>();
    const bool gate_ok = !j.contains("reason") || verdict == "inconclusive";
    if (verdict == "certified") {
      if ((theorem == "T1" && !all_exact) || (theorem == "T2" && !all_exact_from7) || !gate_ok)
        return detail::fail("verdict", "certified verdict is not supported by the records");
    }

    // Regenerate and compare.
    TheoremChoice t = theorem == "T1" ? TheoremChoice::T1 : theorem == "T2" ? TheoremChoice::T2 : TheoremChoice::Auto;
    nlohmann::json regen = to_json(certify(ScatteringKernel::parse(kernel), t, n_max, threads));
    const auto& a = j.at("records");
    const auto& b = regen.at("records");
    if (a.size() != b.size()) return detail::fail("records", "record count differs from regeneration");
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return detail::fail(a[i].value("id", "?"), "record differs from regeneration");
    for (const auto& key : {"base", "gate", "moments", "verdict", "theorem", "product", "telescoping_identity"}) {
      const bool ha = j.contains(key), hb = regen.contains(key);
      if (ha != hb || (ha && j.at(key) != regen.at(key)))
        return detail::fail(key, std::string("field '") + key + "' differs from regeneration");
    }
    return {true, "", "certificate verified"};
  } catch (const std::exception& e) {
    return detail::fail("parse", e.what());
  }
}

}  // namespace kacgap

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kacgap/gamma_exact.hpp"
#include "kacgap/jacobi.hpp"
#include "kacgap/parallel.hpp"
#include "kacgap/rational.hpp"

namespace kacgap {

struct KEigenvalue {
  int n = 0;
  int l = 0;
  int N = 3;
  Rational value;
};

inline void check_particle_count(int N) {
  if (N < 3) throw std::invalid_argument("particle count N must be at least 3");
}

// alpha = (3N-8)/2
inline Rational correlation_alpha(int N) { return rational(3 * N - 8, 2); }

// l* = 3(N-3)/2
inline Rational ell_star(int N) { return rational(3 * (N - 3), 2); }

// kappa_{n,l}(N) for fixed n as a function of l.
//
// With b = -1/(N-1) the explicit sum for P_n^{(alpha, l+1/2)}(-1+2b^2) / P_n(1)
// clears to  kappa = (-1)^l S(l) / (D_n (N-1)^{2n+l}),  where S is a polynomial in l
// with integer coefficients and D_n = prod_{k<n} (3N-6+2k).
class KappaRow {
 public:
  KappaRow(int n, int N) : n_(n), N_(N) {
    check_particle_count(N);
    if (n < 0) throw std::invalid_argument("kappa: n must be nonnegative");
    std::vector<Integer> e(n + 1);
    e[n] = 1;
    for (int s = n - 1; s >= 0; --s) e[s] = e[s + 1] * (3 * N - 6 + 2 * s);
    dn_ = e[0];
    const Integer c = -Integer(N) * (N - 2);
    Integer cpow = 1;
    std::vector<Integer> a{Integer(1)};  // prod_{j<s} (2l + 2n+1-2j)
    poly_.assign(n + 1, Integer(0));
    for (int s = 0; s <= n; ++s) {
      Integer term = binomial(static_cast<unsigned long>(n), static_cast<unsigned long>(s)) * e[s] * cpow;
      for (std::size_t k = 0; k < a.size(); ++k) poly_[k] += term * a[k];
      if (s == n) break;
      std::vector<Integer> next(a.size() + 1, Integer(0));
      const long shift = 2L * n + 1 - 2L * s;
      for (std::size_t k = 0; k < a.size(); ++k) {
        next[k] += a[k] * shift;
        next[k + 1] += a[k] * 2;
      }
      a = std::move(next);
      cpow *= c;
    }
  }

  int n() const { return n_; }
  int N() const { return N_; }

  // Signed numerator for the given l (denominator from denominator()).
  Integer numerator(int l) const {
    Integer acc = 0;
    for (std::size_t k = poly_.size(); k-- > 0;) {
      acc *= l;
      acc += poly_[k];
    }
    if (l % 2 != 0) acc = -acc;
    return acc;
  }

  Integer denominator(int l) const { return dn_ * ipow(Integer(N_ - 1), static_cast<unsigned long>(2 * n_ + l)); }

  Rational value(int l) const {
    Rational r(numerator(l), denominator(l));
    r.canonicalize();
    return r;
  }

 private:
  int n_, N_;
  std::vector<Integer> poly_;
  Integer dn_;
};

inline KEigenvalue kappa(int n, int l, int N) {
  if (l < 0) throw std::invalid_argument("kappa: l must be nonnegative");
  return {n, l, N, KappaRow(n, N).value(l)};
}

// Same eigenvalue through the Jacobi three-term recurrence.
inline Rational kappa_via_jacobi(int n, int l, int N) {
  check_particle_count(N);
  JacobiParams p{n, correlation_alpha(N), rational(2 * l + 1, 2)};
  Rational b(-1, N - 1);
  Rational x = -1 + 2 * b * b;
  return jacobi_exact(p, x) / jacobi_at_one(p) * rpow(b, l);
}

// Eigenvalue of the generalized operator with parameters (a, b, alpha).
inline Rational kappa_general_exact(int n, int l, const Rational& b, const Rational& alpha) {
  if (alpha <= rational(1, 2)) throw std::domain_error("kappa_general: alpha must exceed 1/2");
  if (b < -1 || b > 1) throw std::domain_error("kappa_general: |b| must be at most 1");
  JacobiParams p{n, alpha, rational(2 * l + 1, 2)};
  Rational x = -1 + 2 * b * b;
  return jacobi_exact(p, x) / jacobi_at_one(p) * rpow(b, l);
}

inline double kappa_general(int n, int l, double a, double b, const Rational& alpha) {
  if (std::fabs(a * a + b * b - 1.0) > 1e-12) throw std::domain_error("kappa_general: requires a^2 + b^2 = 1");
  if (alpha <= rational(1, 2)) throw std::domain_error("kappa_general: alpha must exceed 1/2");
  const double al = alpha.get_d(), be = l + 0.5;
  return jacobi_real(n, al, be, -1.0 + 2.0 * b * b) / jacobi_real(n, al, be, 1.0) * std::pow(b, l);
}

// Closed forms for the rows n = 0, 1, 2.
inline Rational closed_form_kappa_row(int n, int l, int N) {
  check_particle_count(N);
  const Integer m1 = N - 1;
  const int sign = (l % 2 == 0) ? 1 : -1;
  Integer den;
  switch (n) {
    case 0: {
      Rational r(Integer(sign), ipow(m1, static_cast<unsigned long>(l)));
      r.canonicalize();
      return r;
    }
    case 1: {
      Integer num = -sign * (Integer(2) * l * N + 3 * (N - 1));
      den = 3 * ipow(m1, static_cast<unsigned long>(l + 2));
      Rational r(num, den);
      r.canonicalize();
      return r;
    }
    case 2: {
      Integer L = l, NN = N;
      Integer num = (4 * L * L + 16 * L + 15) * NN * NN * NN - (8 * L * L + 44 * L + 60) * NN * NN +
                    (49 + 16 * L) * NN - 12;
      num *= sign;
      den = 3 * (3 * NN - 4) * ipow(m1, static_cast<unsigned long>(l + 4));
      Rational r(num, den);
      r.canonicalize();
      return r;
    }
    default: throw std::invalid_argument("closed_form_kappa_row: n must be 0, 1 or 2");
  }
}

inline Rational kappa22(int N) {
  Integer NN = N;
  Rational r(21 * NN * NN * NN - 60 * NN * NN + 27 * NN - 4, (3 * NN - 4) * ipow(Integer(N - 1), 6));
  r.canonicalize();
  return r;
}

inline Rational kappa02(int N) { return Rational(1, (N - 1) * (N - 1)); }

// ---- bounds on kappa^2 ------------------------------------------------------

struct KappaBound {
  int n = 0, l = 0, N = 3;
  double hat_kappa_sq = 0.0;
  double envelope_kappa_sq = 0.0;
  bool applicable = false;  // n + l >= l*
};

namespace detail {

inline double log_g2(int N) {
  double base = static_cast<double>(N - 1) * (N - 1) / (static_cast<double>(N) * (N - 2));
  return 0.5 * (3.0 * N - 7.0) * std::log(base);
}

}  // namespace detail

// Fast lgamma evaluation, used to locate cut points.
inline double hat_kappa_sq_approx(int n, int l, int N) {
  const double a = 1.5 * N - 3.0;
  const int m = n + l;
  double g1 = 4.0 / (3.0 * N + 4.0 * n + 2.0 * l - 5.0) + 1.0;
  double lg3 = std::lgamma(n + 1.0) + std::lgamma(a) - std::lgamma(n + a);
  double lg4 = 2.0 * std::log(N - 1.0) + std::lgamma(m + 1.5) + std::lgamma(a) - std::lgamma(m + a + 0.5);
  return std::exp(std::log(2.0 * std::numbers::e / std::numbers::pi) + std::log(g1) + detail::log_g2(N) + lg3 + lg4);
}

// Envelope kappa^2(N) for n + l >= l*. The bound on g4 behind it needs N >= 4.
inline double envelope_kappa_sq(int N) {
  check_particle_count(N);
  double g1 = 4.0 / (6.0 * N - 14.0) + 1.0;
  double log_f = 2.0 * std::log(N - 1.0) + 0.5 * std::log(std::numbers::pi) + std::log(1.5 * N - 4.0) -
                 (3.0 * N - 8.0) * std::numbers::ln2;
  return std::exp(std::log(2.0 * std::numbers::e / std::numbers::pi) + std::log(g1) + detail::log_g2(N) + log_f);
}

// hat kappa^2 with every Gamma ratio carried as rational * sqrt(pi)^k; only the
// final assembly is floating point.
inline KappaBound kappa_hat_sq(int n, int l, int N) {
  check_particle_count(N);
  if (n < 0 || l < 0) throw std::invalid_argument("kappa_hat_sq: n and l must be nonnegative");
  const Rational a = rational(3 * N - 6, 2);
  const int m = n + l;
  PiScaled prod;
  prod.coefficient = rational(4, 3 * N + 4 * n + 2 * l - 5) + 1;
  // g2 = base^{(3N-7)/2}
  const Rational base(Integer(N - 1) * (N - 1), Integer(N) * (N - 2));
  double sqrt_factor = 1.0;
  if ((3 * N - 7) % 2 == 0) {
    prod.coefficient *= rpow(base, (3 * N - 7) / 2);
  } else {
    prod.coefficient *= rpow(base, (3 * N - 8) / 2);
    sqrt_factor = std::sqrt(base.get_d());
  }
  // g3 = n! Gamma(a) / Gamma(n+a)
  Integer nf;
  mpz_fac_ui(nf.get_mpz_t(), static_cast<unsigned long>(n));
  prod.coefficient *= Rational(nf) / rising_factorial(a, n);
  // g4 = (N-1)^2 Gamma(m+3/2) Gamma(a) / Gamma(m+a+1/2)
  prod.coefficient *= Integer(N - 1) * (N - 1);
  prod = prod * gamma_ratio(Rational(m + rational(3, 2)), Rational(m + a + rational(1, 2)));
  prod = prod * gamma_half_integer(a);
  KappaBound out;
  out.n = n;
  out.l = l;
  out.N = N;
  out.hat_kappa_sq = std::exp(std::log(2.0 * std::numbers::e) - std::log(std::numbers::pi) + prod.log_abs() +
                              std::log(sqrt_factor));
  out.envelope_kappa_sq = envelope_kappa_sq(N);
  out.applicable = Rational(m) >= ell_star(N);
  return out;
}

// ---- finite enumeration ----------------------------------------------------

enum class CellMethod { ClosedForm, Envelope, Hat, Exact, Kblem };

inline const char* to_cstr(CellMethod m) {
  switch (m) {
    case CellMethod::ClosedForm: return "closed-form";
    case CellMethod::Envelope: return "envelope";
    case CellMethod::Hat: return "hat";
    case CellMethod::Exact: return "exact";
    case CellMethod::Kblem: return "kblem";
  }
  return "?";
}

// One checked cell. Exact cells carry their value; bound cells cover the block
// n..n_to, l..l_to (-1 meaning unbounded) and carry the bound on kappa^2.
struct CellRecord {
  int n = 0, l = 0;
  CellMethod method = CellMethod::Exact;
  int n_to = 0, l_to = 0;
  std::string value;  // rational, empty when too long to print
  double approx = 0.0;
};

struct ScanRequest {
  int N = 3;
  Rational upper;  // report cells with kappa >= upper
  Rational lower;  // report cells with kappa <= lower
  std::function<bool(int, int)> excluded;
  bool trust_kblem = false;
  unsigned threads = 0;
  long max_exact_cells = 5'000'000;
};

struct ScanResult {
  int N = 3;
  Rational upper, lower;
  std::vector<CellRecord> cells;
  std::vector<KEigenvalue> hits;  // cells with kappa >= upper or kappa <= lower
  bool envelope_used = false;
  double envelope_kappa_sq = 0.0;
  int rect_n_max = -1;  // extent of exact cells with n + l >= l*
  int rect_l_max = -1;
  long exact_cells = 0;
  std::optional<KEigenvalue> most_negative;
  std::optional<KEigenvalue> largest;
};

class ScanLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct RowPlan {
  int n = 0;
  int exact_to = 0;    // exact cells l in [0, exact_to)
  int hat_cut = -1;    // hat cell at (n, hat_cut), or -1
  bool covers_all_n = false;
};

inline bool hat_certifies(int n, int l, int N, double t2) {
  return kappa_hat_sq(n, l, N).hat_kappa_sq < t2 * (1.0 - 1e-9);
}

// Smallest l >= lo with hat^2(n, l) below t2.
inline int find_hat_cut(int n, int lo, int N, double t2) {
  const double target = t2 * (1.0 - 1e-9);
  int cut;
  if (hat_kappa_sq_approx(n, lo, N) < target) {
    cut = lo;
  } else {
    int good = lo + 1, bad = lo;
    while (!(hat_kappa_sq_approx(n, good, N) < target)) {
      bad = good;
      good = lo + 2 * (good - lo);
      if (good > 50'000'000) throw ScanLimitExceeded("hat bound does not reach the threshold");
    }
    while (good - bad > 1) {
      int mid = bad + (good - bad) / 2;
      if (hat_kappa_sq_approx(n, mid, N) < target) good = mid;
      else bad = mid;
    }
    cut = good;
  }
  while (!hat_certifies(n, cut, N, t2)) ++cut;
  return cut;
}

inline std::string short_rational(const Rational& r) {
  std::string s = r.get_str();
  return s.size() <= 80 ? s : std::string();
}

}  // namespace detail

inline ScanResult scan_spectrum(const ScanRequest& req) {
  const int N = req.N;
  check_particle_count(N);
  if (req.upper <= 0 || req.lower >= 0) throw std::invalid_argument("scan_spectrum: need lower < 0 < upper");
  const Rational t = req.upper < -req.lower ? req.upper : Rational(-req.lower);
  const double t2 = t.get_d() * t.get_d();
  const Rational lstar = ell_star(N);
  const Rational k02 = kappa02(N);

  ScanResult res;
  res.N = N;
  res.upper = req.upper;
  res.lower = req.lower;
  res.envelope_kappa_sq = envelope_kappa_sq(N);

  std::vector<detail::RowPlan> rows;
  std::vector<CellRecord> bound_cells;
  long planned = 0;
  if (N >= 4 && res.envelope_kappa_sq < t2 * (1.0 - 1e-9)) {
    res.envelope_used = true;
    const int first = static_cast<int>(ceil_q(lstar).get_si());
    for (int n = 0; n < first; ++n) {
      int to = static_cast<int>(ceil_q(Rational(lstar - n)).get_si());
      rows.push_back({n, to, -1, false});
      planned += to;
    }
    bound_cells.push_back({0, first, CellMethod::Envelope, -1, -1, "", res.envelope_kappa_sq});
  } else {
    for (int n = 0;; ++n) {
      int lo = std::max<long>(0, ceil_q(Rational(lstar - n)).get_si());
      int cut = detail::find_hat_cut(n, lo, N, t2);
      bool last = (Rational(n) >= lstar && cut == 0);
      rows.push_back({n, cut, cut, last});
      planned += cut;
      if (planned > req.max_exact_cells) throw ScanLimitExceeded("scan needs too many exact cells");
      if (last) break;
      if (n > 1'000'000) throw ScanLimitExceeded("scan did not terminate");
    }
  }
  if (planned > req.max_exact_cells) throw ScanLimitExceeded("scan needs too many exact cells");

  struct RowOut {
    std::vector<CellRecord> cells;
    std::vector<KEigenvalue> hits;
    std::optional<KEigenvalue> lo, hi;
    long exact = 0;
    int rect_l = -1;
    bool in_rect = false;
  };
  std::vector<RowOut> outs(rows.size());

  parallel_for(rows.size(), req.threads, [&](std::size_t idx) {
    const detail::RowPlan& plan = rows[idx];
    const int n = plan.n;
    RowOut& out = outs[idx];
    std::optional<KappaRow> row;
    for (int l = 0; l < plan.exact_to; ++l) {
      if (n == 0 && l == 0) continue;
      if (req.excluded && req.excluded(n, l)) continue;
      const bool below_lstar = Rational(n + l) < lstar;
      if (req.trust_kblem && N >= 4 && n >= 1 && l >= 2 && below_lstar && k02 <= t) {
        out.cells.push_back({n, l, CellMethod::Kblem, n, l, "", k02.get_d()});
        continue;
      }
      Rational v;
      CellMethod method;
      if (n <= 2) {
        v = closed_form_kappa_row(n, l, N);
        method = CellMethod::ClosedForm;
      } else {
        if (!row) row.emplace(n, N);
        v = row->value(l);
        method = CellMethod::Exact;
      }
      ++out.exact;
      if (!below_lstar) {
        out.in_rect = true;
        out.rect_l = std::max(out.rect_l, l);
      }
      out.cells.push_back({n, l, method, n, l, detail::short_rational(v), v.get_d()});
      KEigenvalue ke{n, l, N, v};
      if (v >= req.upper || v <= req.lower) out.hits.push_back(ke);
      if (!out.lo || v < out.lo->value) out.lo = ke;
      if (!out.hi || v > out.hi->value) out.hi = ke;
    }
    if (plan.hat_cut >= 0) {
      CellRecord hc{n, plan.hat_cut, CellMethod::Hat, plan.covers_all_n ? -1 : n, -1, "",
                    kappa_hat_sq(n, plan.hat_cut, N).hat_kappa_sq};
      out.cells.push_back(hc);
    }
  });

  for (std::size_t i = 0; i < outs.size(); ++i) {
    auto& o = outs[i];
    for (auto& c : o.cells) res.cells.push_back(std::move(c));
    for (auto& h : o.hits) res.hits.push_back(std::move(h));
    res.exact_cells += o.exact;
    if (o.lo && (!res.most_negative || o.lo->value < res.most_negative->value)) res.most_negative = o.lo;
    if (o.hi && (!res.largest || o.hi->value > res.largest->value)) res.largest = o.hi;
    if (o.in_rect) {
      res.rect_n_max = std::max(res.rect_n_max, rows[i].n);
      res.rect_l_max = std::max(res.rect_l_max, o.rect_l);
    }
  }
  for (auto& c : bound_cells) res.cells.push_back(std::move(c));
  return res;
}

// Direct check of |kappa| < 1/(N-1)^2 for 2 <= l < l*, 1 <= n <= n_max.
struct KblemSpotCheck {
  long checked = 0;
  std::vector<KEigenvalue> violations;
};

inline KblemSpotCheck kblem_spot_check(int N, int n_max = 40) {
  KblemSpotCheck out;
  const Rational lstar = ell_star(N), k02 = kappa02(N);
  for (int n = 1; n <= n_max; ++n) {
    KappaRow row(n, N);
    for (int l = 2; Rational(l) < lstar; ++l) {
      Rational v = row.value(l);
      ++out.checked;
      if (abs(v) >= k02) out.violations.push_back({n, l, N, v});
    }
  }
  return out;
}

struct MonoReport {
  int N = 3;
  Rational threshold;        // upper threshold
  Rational lower;            // -1/(N-1)
  bool upper_inclusive = false;
  ScanResult scan;
  bool certified = false;
  std::optional<KEigenvalue> counterexample;
  std::optional<double> envelope_criterion;  // (N-1)^4 kappa^2(N)
  KblemSpotCheck kblem;
};

inline Rational mono_threshold(int N) {
  check_particle_count(N);
  if (N == 3) return rational(13, 40);
  if (N == 4) return closed_form_kappa_row(2, 0, 4);
  return kappa02(N);
}

inline bool mono_excluded(int N, int n, int l) {
  if (N == 3) return (n == 0 && l == 0) || (n == 1 && l == 1);
  return n + l <= 2;
}

inline MonoReport verify_mono(int N, unsigned threads = 0) {
  MonoReport rep;
  rep.N = N;
  rep.threshold = mono_threshold(N);
  rep.lower = rational(-1, N - 1);
  rep.upper_inclusive = (N == 3);
  ScanRequest req;
  req.N = N;
  req.upper = rep.threshold;
  req.lower = rep.lower;
  req.excluded = [N](int n, int l) { return mono_excluded(N, n, l); };
  req.threads = threads;
  rep.scan = scan_spectrum(req);
  rep.certified = true;
  for (const auto& h : rep.scan.hits) {
    bool ok = (h.value == rep.lower) || (rep.upper_inclusive && h.value == rep.threshold);
    if (!ok) {
      rep.certified = false;
      rep.counterexample = h;
      break;
    }
  }
  if (N >= 4) {
    double nm1 = N - 1.0;
    rep.envelope_criterion = nm1 * nm1 * nm1 * nm1 * envelope_kappa_sq(N);
  }
  rep.kblem = kblem_spot_check(N);
  return rep;
}

inline nlohmann::json to_json(const KEigenvalue& k) {
  return {{"n", k.n}, {"l", k.l}, {"N", k.N}, {"value", k.value.get_str()}};
}

inline nlohmann::json to_json(const CellRecord& c) {
  nlohmann::json j{{"n", c.n}, {"l", c.l}, {"method", to_cstr(c.method)}};
  switch (c.method) {
    case CellMethod::Exact:
    case CellMethod::ClosedForm:
      if (!c.value.empty()) j["value"] = c.value;
      j["approx"] = c.approx;
      break;
    case CellMethod::Kblem:
      j["bound"] = "|kappa| < 1/(N-1)^2";
      break;
    case CellMethod::Hat:
    case CellMethod::Envelope:
      j["bound_kappa_sq"] = c.approx;
      j["n_to"] = c.n_to < 0 ? nlohmann::json(nullptr) : nlohmann::json(c.n_to);
      j["l_to"] = nullptr;
      if (c.method == CellMethod::Envelope) j["covers"] = "n+l >= l*";
      break;
  }
  return j;
}

inline nlohmann::json to_json(const MonoReport& r, bool with_cells = true) {
  nlohmann::json j;
  j["N"] = r.N;
  j["threshold"] = r.threshold.get_str();
  j["lower"] = r.lower.get_str();
  j["verdict"] = r.certified ? "certified" : "counterexample";
  if (r.counterexample) j["counterexample"] = to_json(*r.counterexample);
  if (r.scan.most_negative) j["most_negative"] = to_json(*r.scan.most_negative);
  j["envelope_used"] = r.scan.envelope_used;
  j["envelope_kappa_sq"] = r.scan.envelope_kappa_sq;
  if (r.envelope_criterion) j["envelope_criterion"] = *r.envelope_criterion;
  j["exact_cells"] = r.scan.exact_cells;
  j["rectangle"] = {{"n_max", r.scan.rect_n_max}, {"l_max", r.scan.rect_l_max}};
  j["kblem_spot_check"] = {{"checked", r.kblem.checked}, {"violations", r.kblem.violations.size()}};
  if (with_cells) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.scan.cells) cells.push_back(to_json(c));
    j["cells"] = std::move(cells);
  }
  return j;
}

}  // namespace kacgap

#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kacgap/correlation.hpp"
#include "kacgap/rational.hpp"

namespace kacgap {

enum class Symmetry { Symmetric, Antisymmetric };

inline const char* to_cstr(Symmetry s) { return s == Symmetry::Symmetric ? "symmetric" : "antisymmetric"; }

enum class EigenspaceKind { Antisym01, Antisym10, Sym02, Sym11, Sym20, Other };

inline const char* to_cstr(EigenspaceKind k) {
  switch (k) {
    case EigenspaceKind::Antisym01: return "Antisym01";
    case EigenspaceKind::Antisym10: return "Antisym10";
    case EigenspaceKind::Sym02: return "Sym02";
    case EigenspaceKind::Sym11: return "Sym11";
    case EigenspaceKind::Sym20: return "Sym20";
    case EigenspaceKind::Other: return "Other";
  }
  return "?";
}

struct EigenspaceDescriptor {
  EigenspaceKind kind = EigenspaceKind::Other;
  int n = 0, l = 0;
  long dimension = 0;
};

// Symmetric lifts sum f over particles and have dimension 2l+1; antisymmetric
// lifts are spanned by differences f(pi_i) - f(pi_j) and have dimension (N-1)(2l+1).
inline EigenspaceDescriptor eigenspace(int n, int l, int N, Symmetry s) {
  EigenspaceDescriptor d;
  d.n = n;
  d.l = l;
  d.dimension = (s == Symmetry::Symmetric) ? 2L * l + 1 : static_cast<long>(N - 1) * (2L * l + 1);
  if (s == Symmetry::Antisymmetric) {
    if (n == 0 && l == 1) d.kind = EigenspaceKind::Antisym01;
    else if (n == 1 && l == 0) d.kind = EigenspaceKind::Antisym10;
  } else {
    if (n == 0 && l == 2) d.kind = EigenspaceKind::Sym02;
    else if (n == 1 && l == 1) d.kind = EigenspaceKind::Sym11;
    else if (n == 2 && l == 0) d.kind = EigenspaceKind::Sym20;
  }
  return d;
}

struct PEigenvalue {
  KEigenvalue source;
  Symmetry symmetry = Symmetry::Symmetric;
  Rational value;
  EigenspaceDescriptor space;
};

inline PEigenvalue mu_from_kappa(const KEigenvalue& k, Symmetry s) {
  check_particle_count(k.N);
  PEigenvalue p;
  p.source = k;
  p.symmetry = s;
  if (s == Symmetry::Symmetric) p.value = (1 + (k.N - 1) * k.value) / k.N;
  else p.value = (1 - k.value) / k.N;
  p.space = eigenspace(k.n, k.l, k.N, s);
  return p;
}

// The lift that gives the larger eigenvalue of P.
inline PEigenvalue mu_larger_lift(const KEigenvalue& k) {
  return mu_from_kappa(k, k.value >= 0 ? Symmetry::Symmetric : Symmetry::Antisymmetric);
}

inline Rational mu22(int N) { return mu_from_kappa({2, 2, N, kappa22(N)}, Symmetry::Symmetric).value; }

inline Rational mu02(int N) { return mu_from_kappa({0, 2, N, kappa02(N)}, Symmetry::Symmetric).value; }

// mu_{1,1}(N), the gap eigenvalue of P.
inline Rational mu_gap(int N) {
  check_particle_count(N);
  return rational(3 * N - 1, 3 * (N - 1) * (N - 1));
}

class CompletenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PSpectrum {
  int N = 3;
  Rational mu_star;
  std::vector<PEigenvalue> entries;  // sorted by decreasing value
  ScanResult scan;
};

// All eigenvalues mu of P with mu_star <= mu < 1.
inline PSpectrum p_top_spectrum(int N, const Rational& mu_star, unsigned threads = 0) {
  check_particle_count(N);
  if (mu_star <= rational(1, N))
    throw CompletenessError("p_top_spectrum: mu_star must exceed 1/N, otherwise infinitely many eigenvalues qualify");
  if (mu_star >= 1) throw std::invalid_argument("p_top_spectrum: mu_star must be below 1");
  PSpectrum out;
  out.N = N;
  out.mu_star = mu_star;
  ScanRequest req;
  req.N = N;
  req.upper = (N * mu_star - 1) / (N - 1);
  req.lower = 1 - N * mu_star;
  req.excluded = [](int n, int l) { return n == 0 && l == 0; };
  req.trust_kblem = N > 12;
  req.threads = threads;
  try {
    out.scan = scan_spectrum(req);
  } catch (const ScanLimitExceeded& e) {
    throw CompletenessError(std::string("p_top_spectrum: cannot certify completeness: ") + e.what());
  }
  for (const auto& h : out.scan.hits) {
    for (Symmetry s : {Symmetry::Symmetric, Symmetry::Antisymmetric}) {
      PEigenvalue p = mu_from_kappa(h, s);
      if (p.value >= mu_star && p.value < 1) out.entries.push_back(p);
    }
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const PEigenvalue& a, const PEigenvalue& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.source.n != b.source.n) return a.source.n < b.source.n;
    if (a.source.l != b.source.l) return a.source.l < b.source.l;
    return a.symmetry < b.symmetry;
  });
  return out;
}

struct TwoTwoReport {
  int N = 3;
  Rational mu22;
  Rational kappa22;
  ScanResult scan;
  bool certified = false;
  std::optional<KEigenvalue> counterexample;
  Rational sup_mu;  // largest lift over n + l > 2
  KEigenvalue sup_cell;
};

// Checks that mu_{2,2}(N) is the largest lift over n + l > 2.
inline TwoTwoReport verify_twotwo(int N, unsigned threads = 0) {
  check_particle_count(N);
  TwoTwoReport rep;
  rep.N = N;
  rep.kappa22 = kappa22(N);
  rep.mu22 = mu22(N);
  ScanRequest req;
  req.N = N;
  req.upper = rep.kappa22;
  req.lower = -(N - 1) * rep.kappa22;
  req.excluded = [](int n, int l) { return n + l <= 2; };
  req.threads = threads;
  rep.scan = scan_spectrum(req);
  rep.certified = true;
  rep.sup_mu = rep.mu22;
  rep.sup_cell = {2, 2, N, rep.kappa22};
  for (const auto& h : rep.scan.hits) {
    const Rational mu = mu_larger_lift(h).value;
    if (mu != rep.mu22 && !rep.counterexample) {
      rep.certified = false;
      rep.counterexample = h;
    }
    if (mu > rep.sup_mu) {
      rep.sup_mu = mu;
      rep.sup_cell = h;
    }
  }
  return rep;
}

inline nlohmann::json to_json(const EigenspaceDescriptor& d) {
  nlohmann::json j{{"kind", to_cstr(d.kind)}, {"dimension", d.dimension}};
  if (d.kind == EigenspaceKind::Other) {
    j["n"] = d.n;
    j["l"] = d.l;
  }
  return j;
}

inline nlohmann::json to_json(const PEigenvalue& p) {
  return {{"n", p.source.n},
          {"l", p.source.l},
          {"kappa", p.source.value.get_str()},
          {"symmetry", to_cstr(p.symmetry)},
          {"mu", p.value.get_str()},
          {"eigenspace", to_cstr(p.space.kind)},
          {"dimension", p.space.dimension}};
}

inline nlohmann::json to_json(const PSpectrum& s) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : s.entries) entries.push_back(to_json(e));
  return {{"N", s.N},
          {"mu_star", s.mu_star.get_str()},
          {"entries", std::move(entries)},
          {"exact_cells", s.scan.exact_cells},
          {"envelope_used", s.scan.envelope_used}};
}

inline nlohmann::json to_json(const TwoTwoReport& r, bool with_cells = false) {
  nlohmann::json j{{"N", r.N},
                   {"kappa22", r.kappa22.get_str()},
                   {"mu22", r.mu22.get_str()},
                   {"verdict", r.certified ? "certified" : "counterexample"},
                   {"exact_cells", r.scan.exact_cells},
                   {"envelope_used", r.scan.envelope_used},
                   {"rectangle", {{"n_max", r.scan.rect_n_max}, {"l_max", r.scan.rect_l_max}}}};
  if (r.counterexample) j["counterexample"] = to_json(*r.counterexample);
  j["sup_mu"] = r.sup_mu.get_str();
  j["sup_cell"] = to_json(r.sup_cell);
  if (with_cells) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.scan.cells) cells.push_back(to_json(c));
    j["cells"] = std::move(cells);
  }
  return j;
}

}  // namespace kacgap

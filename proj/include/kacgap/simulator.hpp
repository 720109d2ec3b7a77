#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kacgap/kernel.hpp"
#include "kacgap/parallel.hpp"
#include "kacgap/qspec.hpp"
#include "kacgap/random.hpp"
#include "kacgap/state.hpp"

namespace kacgap {

// Stream ids: replica r of a walk uses stream r; block b of a Rayleigh estimate
// uses stream 2^32 + b.
constexpr std::uint64_t kRayleighStreamBase = std::uint64_t{1} << 32;

inline std::size_t uniform_index(CounterRng& rng, std::size_t count) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::min(count - 1, static_cast<std::size_t>(u * static_cast<double>(count)));
}

// One binary collision on a uniformly chosen pair. Returns false when the pair
// has equal velocities and the collision is a no-op.
inline bool collision_step_inplace(VelocityState& s, const ScatteringKernel& k, CounterRng& rng) {
  const int N = s.N();
  const std::size_t pairs = static_cast<std::size_t>(N) * (N - 1) / 2;
  std::size_t idx = uniform_index(rng, pairs);
  int i = 0;
  while (idx >= static_cast<std::size_t>(N - 1 - i)) {
    idx -= static_cast<std::size_t>(N - 1 - i);
    ++i;
  }
  const int j = i + 1 + static_cast<int>(idx);
  const Eigen::Vector3d d = s.v[i] - s.v[j];
  const double norm = d.norm();
  if (norm < 1e-14) return false;
  const Eigen::Vector3d sigma = sample_direction(k, d / norm, rng);
  const Eigen::Vector3d c = 0.5 * (s.v[i] + s.v[j]);
  s.v[i] = c + 0.5 * norm * sigma;
  s.v[j] = c - 0.5 * norm * sigma;
  return true;
}

inline VelocityState collision_step(VelocityState s, const ScatteringKernel& k, CounterRng& rng) {
  collision_step_inplace(s, k, rng);
  return s;
}

struct WalkConfig {
  int N = 3;
  ScatteringKernel kernel = ScatteringKernel::uniform();
  std::optional<long> steps;       // discrete collisions per replica
  std::optional<double> horizon;   // continuous time per replica
  long cadence = 10'000;           // re-projection period in collisions, 0 for never
  std::uint64_t seed = 1;
  long replicas = 1;
  int time_points = 41;
  unsigned threads = 0;

  void validate() const {
    if (N < 2) throw std::invalid_argument("WalkConfig: N must be at least 2");
    if (replicas < 1) throw std::invalid_argument("WalkConfig: need at least one replica");
    if (steps && *steps < 0) throw std::invalid_argument("WalkConfig: steps must be nonnegative");
    if (horizon && !(*horizon > 0.0)) throw std::invalid_argument("WalkConfig: horizon must be positive");
    if (cadence < 0) throw std::invalid_argument("WalkConfig: cadence must be nonnegative");
    if (time_points < 2) throw std::invalid_argument("WalkConfig: need at least two time points");
  }
};

class KacWalk {
 public:
  KacWalk(VelocityState s, ScatteringKernel k, CounterRng rng, long cadence)
      : state_(std::move(s)), kernel_(std::move(k)), rng_(rng), cadence_(cadence) {}

  void step() {
    collision_step_inplace(state_, kernel_, rng_);
    ++steps_;
    if (cadence_ > 0 && steps_ % cadence_ == 0) state_.renormalize();
  }

  void run(long n) {
    for (long i = 0; i < n; ++i) step();
  }

  // Advances the Poisson clock of rate N to time t.
  void advance_to(double t) {
    while (true) {
      if (!next_event_) next_event_ = time_ + exponential(rng_, state_.N());
      if (*next_event_ > t) break;
      time_ = *next_event_;
      next_event_.reset();
      step();
    }
    time_ = t;
  }

  const VelocityState& state() const { return state_; }
  long steps() const { return steps_; }
  double time() const { return time_; }

 private:
  VelocityState state_;
  ScatteringKernel kernel_;
  CounterRng rng_;
  long cadence_;
  long steps_ = 0;
  double time_ = 0.0;
  std::optional<double> next_event_;
};

struct RayleighEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long samples = 0;
  int blocks = 0;
};

// <f, Qf>/<f, f> over uniform states with Qf evaluated in closed form per state;
// standard error by block jackknife on the ratio.
inline RayleighEstimate rayleigh_estimate(const FunctionDescriptor& f, int N, const ScatteringKernel& k, long samples,
                                          std::uint64_t seed, unsigned threads = 0, int blocks = 200) {
  if (!f.centered()) throw std::invalid_argument("rayleigh_estimate: observable '" + f.name() + "' is not centered");
  if (N < 3) throw std::invalid_argument("rayleigh_estimate: N must be at least 3");
  f.validate(N);
  if (samples < 2) throw std::invalid_argument("rayleigh_estimate: need at least two samples");
  blocks = static_cast<int>(std::min<long>(blocks, samples));
  if (blocks < 2) blocks = 2;
  const KernelMoments m = moments(k);
  const double B1 = m.b1.approx(), B2 = m.b2.approx();
  std::vector<double> num(blocks, 0.0), den(blocks, 0.0);
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    CounterRng rng(seed, kRayleighStreamBase + b);
    const long lo = samples * static_cast<long>(b) / blocks, hi = samples * static_cast<long>(b + 1) / blocks;
    double sn = 0.0, sd = 0.0;
    for (long i = lo; i < hi; ++i) {
      VelocityState s = sample_state(N, rng);
      const double fv = evaluate(f, s);
      sn += fv * apply_q_pointwise(f, s, B1, B2);
      sd += fv * fv;
    }
    num[b] = sn;
    den[b] = sd;
  });
  double tn = 0.0, td = 0.0;
  for (int b = 0; b < blocks; ++b) {
    tn += num[b];
    td += den[b];
  }
  RayleighEstimate out;
  out.samples = samples;
  out.blocks = blocks;
  out.estimate = tn / td;
  std::vector<double> loo(blocks);
  double mean = 0.0;
  for (int b = 0; b < blocks; ++b) {
    loo[b] = (tn - num[b]) / (td - den[b]);
    mean += loo[b];
  }
  mean /= blocks;
  double ss = 0.0;
  for (double x : loo) ss += (x - mean) * (x - mean);
  out.std_error = std::sqrt(ss * (blocks - 1.0) / blocks);
  return out;
}

struct DecayFit {
  double rate = 0.0;
  double rate_se = 0.0;
  double r_squared = 0.0;
  int points = 0;
  double t_min = 0.0, t_max = 0.0;
  std::optional<double> expected_rate;
  std::string warning;
};

struct RelaxationResult {
  WalkConfig config;
  std::vector<std::string> observables;
  std::vector<double> times;
  std::vector<std::vector<double>> mean;  // [observable][time]
  std::vector<std::vector<double>> se;
  std::vector<DecayFit> fits;
  double max_constraint_drift = 0.0;
};

namespace detail {

// Weighted least squares of log m(t) on t with weights (m/se)^2 over the points
// where the signal stands 5 standard errors clear of zero.
inline DecayFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& m, const std::vector<double>& se) {
  DecayFit fit;
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(m[i] > 0.0) || !(m[i] > 5.0 * se[i])) {
      if (i > 0) break;
      continue;
    }
    x.push_back(t[i]);
    y.push_back(std::log(m[i]));
    const double rel = se[i] > 0.0 ? se[i] / m[i] : 1e-6;
    w.push_back(1.0 / std::max(rel * rel, 1e-12));
  }
  fit.points = static_cast<int>(x.size());
  if (x.size() < 3) {
    fit.warning = "too few points above noise for a fit";
    return fit;
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    syy += w[i] * (y[i] - ym) * (y[i] - ym);
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.rate_se = std::sqrt(1.0 / sxx);
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.t_min = x.front();
  fit.t_max = x.back();
  if (fit.r_squared < 0.99) fit.warning = "fit quality R^2 below 0.99";
  return fit;
}

}  // namespace detail

// Continuous-time runs from a linearly tilted ensemble: replica r starts from a
// uniform state X_0 with weight f(X_0), so the weighted mean of f(X_t),
// normalized at t = 0, decays like exp(-N(1 - lambda) t) for an eigenfunction.
inline RelaxationResult relaxation_run(const WalkConfig& cfg, const std::vector<FunctionDescriptor>& observables) {
  cfg.validate();
  if (observables.empty()) throw std::invalid_argument("relaxation_run: no observables");
  for (const auto& f : observables) f.validate(cfg.N);
  const double horizon = cfg.horizon ? *cfg.horizon : static_cast<double>(cfg.steps.value_or(10L * cfg.N)) / cfg.N;
  RelaxationResult res;
  res.config = cfg;
  const int T = cfg.time_points;
  const std::size_t K = observables.size();
  for (int i = 0; i < T; ++i) res.times.push_back(horizon * i / (T - 1));
  for (const auto& f : observables) res.observables.push_back(f.name());

  // Per-chunk partial sums of w f(X_t), (w f(X_t))^2 and w^2, reduced in chunk order.
  const long R = cfg.replicas;
  const long chunk_size = 1000;
  const long chunks = (R + chunk_size - 1) / chunk_size;
  struct Partial {
    std::vector<double> s1, s2, w2;
    double drift = 0.0;
  };
  std::vector<Partial> parts(chunks);
  parallel_for(static_cast<std::size_t>(chunks), cfg.threads, [&](std::size_t c) {
    Partial& p = parts[c];
    p.s1.assign(K * T, 0.0);
    p.s2.assign(K * T, 0.0);
    p.w2.assign(K, 0.0);
    const long lo = static_cast<long>(c) * chunk_size, hi = std::min(R, lo + chunk_size);
    for (long r = lo; r < hi; ++r) {
      CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
      VelocityState s0 = sample_state(cfg.N, rng);
      std::vector<double> w(K);
      for (std::size_t k = 0; k < K; ++k) {
        w[k] = evaluate(observables[k], s0);
        p.w2[k] += w[k] * w[k];
      }
      KacWalk walk(std::move(s0), cfg.kernel, rng, cfg.cadence);
      for (int i = 0; i < T; ++i) {
        walk.advance_to(res.times[i]);
        for (std::size_t k = 0; k < K; ++k) {
          const double v = w[k] * evaluate(observables[k], walk.state());
          p.s1[k * T + i] += v;
          p.s2[k * T + i] += v * v;
        }
      }
      p.drift = std::max({p.drift, walk.state().momentum_error(), walk.state().energy_error()});
    }
  });
  std::vector<double> s1(K * T, 0.0), s2(K * T, 0.0), w2(K, 0.0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < K * T; ++i) {
      s1[i] += p.s1[i];
      s2[i] += p.s2[i];
    }
    for (std::size_t k = 0; k < K; ++k) w2[k] += p.w2[k];
    res.max_constraint_drift = std::max(res.max_constraint_drift, p.drift);
  }
  const KernelMoments m = moments(cfg.kernel);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> mean(T), se(T);
    const double norm = w2[k] / R;
    for (int i = 0; i < T; ++i) {
      const double mu = s1[k * T + i] / R;
      const double var = std::max(0.0, s2[k * T + i] / R - mu * mu);
      mean[i] = norm > 0.0 ? mu / norm : 0.0;
      se[i] = norm > 0.0 ? std::sqrt(var / R) / norm : 0.0;
    }
    DecayFit fit = detail::fit_log_linear(res.times, mean, se);
    if (auto lam = descriptor_eigenvalue(observables[k], cfg.N, m.b1.approx(), m.b2.approx()))
      fit.expected_rate = cfg.N * (1.0 - *lam);
    res.mean.push_back(std::move(mean));
    res.se.push_back(std::move(se));
    res.fits.push_back(fit);
  }
  return res;
}

inline std::string to_csv(const RelaxationResult& r) {
  std::ostringstream os;
  os.precision(10);
  os << "t";
  for (const auto& name : r.observables) os << "," << name << "," << name << "_se";
  os << "\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << r.times[i];
    for (std::size_t k = 0; k < r.observables.size(); ++k) os << "," << r.mean[k][i] << "," << r.se[k][i];
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json to_json(const RelaxationResult& r) {
  nlohmann::json fits = nlohmann::json::array();
  for (std::size_t k = 0; k < r.fits.size(); ++k) {
    const DecayFit& f = r.fits[k];
    nlohmann::json j{{"observable", r.observables[k]},
                     {"rate", f.rate},
                     {"rate_se", f.rate_se},
                     {"ci95", {f.rate - 1.96 * f.rate_se, f.rate + 1.96 * f.rate_se}},
                     {"r_squared", f.r_squared},
                     {"points", f.points},
                     {"window", {f.t_min, f.t_max}}};
    if (f.expected_rate) j["expected_rate"] = *f.expected_rate;
    if (!f.warning.empty()) j["warning"] = f.warning;
    fits.push_back(std::move(j));
  }
  return {{"N", r.config.N},
          {"kernel", r.config.kernel.id()},
          {"replicas", r.config.replicas},
          {"seed", r.config.seed},
          {"horizon", r.times.back()},
          {"max_constraint_drift", r.max_constraint_drift},
          {"fits", std::move(fits)}};
}

}  // namespace kacgap

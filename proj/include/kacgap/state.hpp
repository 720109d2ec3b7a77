#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kacgap/random.hpp"

namespace kacgap {

// N velocities in R^3 with zero total momentum and unit total energy.
struct VelocityState {
  std::vector<Eigen::Vector3d> v;

  int N() const { return static_cast<int>(v.size()); }

  double momentum_error() const {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (const auto& x : v) s += x;
    return s.cwiseAbs().maxCoeff();
  }

  double energy_error() const {
    double e = 0.0;
    for (const auto& x : v) e += x.squaredNorm();
    return std::fabs(e - 1.0);
  }

  void validate(double tol = 1e-12) const {
    if (N() < 2) throw std::invalid_argument("VelocityState: need at least 2 particles");
    if (momentum_error() > tol) throw std::domain_error("VelocityState: total momentum is not zero");
    if (energy_error() > tol) throw std::domain_error("VelocityState: total energy is not one");
  }

  // Subtract the mean velocity and rescale the energy to one.
  void renormalize() {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double e = 0.0;
    for (auto& x : v) {
      x -= mean;
      e += x.squaredNorm();
    }
    const double scale = 1.0 / std::sqrt(e);
    for (auto& x : v) x *= scale;
  }
};

// Uniform draw from the constrained sphere: Gaussian vector projected onto the
// zero-momentum subspace and normalized.
inline VelocityState sample_state(int N, CounterRng& rng) {
  if (N < 2) throw std::invalid_argument("sample_state: N must be at least 2");
  VelocityState s;
  s.v.resize(N);
  while (true) {
    for (auto& x : s.v)
      for (int c = 0; c < 3; ++c) x[c] = standard_normal(rng);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& x : s.v) mean += x;
    mean /= N;
    double e = 0.0;
    for (auto& x : s.v) {
      x -= mean;
      e += x.squaredNorm();
    }
    if (e > 1e-300) {
      const double scale = 1.0 / std::sqrt(e);
      for (auto& x : s.v) x *= scale;
      return s;
    }
  }
}

}  // namespace kacgap

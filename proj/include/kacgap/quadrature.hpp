#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace kacgap {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

inline constexpr int kMaxQuadratureNodes = 2048;

// Nodes and weights for the weight (1-x)^alpha (1+x)^beta on [-1,1], by Golub-Welsch.
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: need at least one node");
  if (n > kMaxQuadratureNodes) throw std::invalid_argument("gauss_jacobi: too many nodes");
  if (!(alpha > -1.0) || !(beta > -1.0)) throw std::domain_error("gauss_jacobi: exponents must exceed -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
  diag(0) = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    double s = 2.0 * k + ab;
    diag(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    double b2;
    if (k == 1) {
      b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub(k - 1) = std::sqrt(b2);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                              std::lgamma(ab + 2.0));
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_jacobi: eigensolver failed");
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

// Gauss-Legendre rule mapped to [a,b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule r = gauss_legendre(n);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    r.nodes[i] = c + h * r.nodes[i];
    r.weights[i] *= h;
  }
  return r;
}

}  // namespace kacgap

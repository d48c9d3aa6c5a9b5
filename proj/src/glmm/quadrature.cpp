#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "exmap/glmm/quadrature.hpp"

namespace exmap::glmm {

namespace {

GaussHermiteRule compute_rule(int n) {
  // Golub-Welsch: eigenvalues of the symmetric tridiagonal Jacobi matrix of
  // the Hermite polynomials are the nodes; weights come from the first
  // eigenvector components.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(static_cast<double>(i) / 2.0);
    J(i, i - 1) = off;
    J(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermiteRule rule;
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    if (std::abs(x) < 1e-14) x = 0.0;
    const double v = es.eigenvectors()(0, i);
    rule.nodes.push_back(x);
    rule.weights.push_back(mu0 * v * v);
  }
  // Symmetrize to remove eigen-solver noise.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  for (int i = 0; i < n; ++i)
    rule.log_weight_plus_sq.push_back(std::log(rule.weights[i]) + rule.nodes[i] * rule.nodes[i]);
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1 || n > 100) throw std::invalid_argument("gauss_hermite: node count must be in 1..100");
  static std::mutex mu;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
  return it->second;
}

}  // namespace exmap::glmm

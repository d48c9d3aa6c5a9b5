#pragma once

// Shared per-row numerics of the binomial-logit model.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exmap/glmm/likelihood.hpp"

namespace exmap::glmm::detail {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double inv_logit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_binom_coef(std::int64_t y, std::int64_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(y) + 1.0) -
         std::lgamma(static_cast<double>(n - y) + 1.0);
}

/// One binomial row of a cluster with its fixed-effect offset.
struct RowTerm {
  int k = 0;
  double y = 0.0;
  double n = 0.0;
  double a = 0.0;  // fixed part of the linear predictor
  double lconst = 0.0;
};

struct RowEval {
  double ll, score, info;  // log pmf, d/d eta, -d2/d eta2
};

inline RowEval eval_row(const RowTerm& r, double eta) {
  const double p = inv_logit(eta);
  return {r.y * eta - r.n * softplus(eta) + r.lconst, r.y - r.n * p, r.n * p * (1.0 - p)};
}

std::vector<RowTerm> prepare_rows(const ModelParams& params, const StackedDesign& design,
                                  const Cluster& cluster, std::vector<double>* fixed_rows = nullptr);

/// K x K square root of the CSH matrix (A A^T = S).
Eigen::MatrixXd csh_sqrt(const ModelParams& params);

struct PosteriorMode {
  Eigen::VectorXd v;      // mode in the standardized coordinates
  Eigen::MatrixXd neg_hessian;
  double log_joint = 0.0;  // sum of row log pmfs - |v|^2/2 at the mode
  bool converged = false;
};

/// Mode of sum_r ll_r(a_r + (A v)_{k_r}) - |v|^2 / 2 by damped Newton.
PosteriorMode posterior_mode(std::span<const RowTerm> rows, const Eigen::MatrixXd& A);

/// Laplace approximation of one cluster's log-likelihood for any admissible
/// rho (used for rho < 0).
double cluster_laplace(const ModelParams& params, const StackedDesign& design, const Cluster& cluster);

}  // namespace exmap::glmm::detail

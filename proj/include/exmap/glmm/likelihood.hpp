#pragma once

#include <span>
#include <vector>

#include "exmap/glmm/design.hpp"

namespace exmap::glmm {

/// Fixed effects plus the heterogeneous compound-symmetry covariance of the
/// cluster random effects: S_kk = sigma2[k], S_kl = rho * sigma_k * sigma_l.
struct ModelParams {
  std::vector<double> beta;
  std::vector<double> sigma2;
  double rho = 0.0;
};

/// Lower bound of the admissible correlation for K indicators.
double rho_lower_bound(std::size_t K);

/// Throws std::invalid_argument when sizes do not match the design or the
/// implied covariance is not positive semi-definite.
void validate_params(const ModelParams& params, const StackedDesign& design);

struct QuadratureConfig {
  /// Nodes per dimension of the nested adaptive Gauss-Hermite rule;
  /// 1 is the Laplace approximation.
  int nodes = 7;
};

/// Log binomial probability mass with its normalizing constant.
double binomial_log_pmf(std::int64_t y, std::int64_t n, double eta);

/// Marginal log-likelihood, clusters evaluated in parallel. Deterministic:
/// per-cluster terms are summed in cluster order.
double marginal_log_likelihood(const ModelParams& params, const StackedDesign& design,
                               const QuadratureConfig& config = {});

/// Reference: same computation, one cluster after another.
double marginal_log_likelihood_serial(const ModelParams& params, const StackedDesign& design,
                                      const QuadratureConfig& config = {});

/// Log-likelihood of one cluster.
double cluster_log_likelihood(const ModelParams& params, const StackedDesign& design,
                              const Cluster& cluster, const QuadratureConfig& config = {});

/// Sum over rows of the binomial log-likelihood with all random effects at 0.
double independent_binomial_log_likelihood(const ModelParams& params, const StackedDesign& design);

/// Maps between natural parameters and the unconstrained vector the
/// optimizer works on: [beta | log sigma2 | tau], where
/// rho = lo + (1 - lo) (1 + tanh tau) / 2 and tau is omitted when K = 1 or
/// rho is held fixed.
class ParamTransform {
 public:
  ParamTransform(const StackedDesign& design, bool estimate_rho);

  std::size_t size() const { return p_ + K_ + (estimate_rho_ ? 1 : 0); }
  std::size_t num_fixed() const { return p_; }
  std::size_t K() const { return K_; }
  bool estimates_rho() const { return estimate_rho_; }

  std::vector<double> to_working(const ModelParams& params) const;
  /// `fixed_rho` is used when rho is not estimated.
  ModelParams to_natural(std::span<const double> working, double fixed_rho = 0.0) const;
  /// d natural / d working, elementwise (the map is diagonal).
  std::vector<double> jacobian_diagonal(std::span<const double> working) const;

 private:
  std::size_t p_, K_;
  bool estimate_rho_;
  double lo_;
};

struct LikelihoodGradient {
  double value = 0.0;
  /// d value / d working parameters, layout of ParamTransform.
  std::vector<double> working;
  /// d value / d natural parameters [beta | sigma2 | rho]; sigma2 entries
  /// are infinite/NaN when the corresponding sigma2 is 0.
  std::vector<double> natural;
};

/// Value and gradient. For nodes >= 3 and rho > 0 the gradient is analytic
/// (adaptive centring held fixed); otherwise central differences on the
/// working scale are used.
LikelihoodGradient marginal_log_likelihood_gradient(const ModelParams& params,
                                                    const StackedDesign& design,
                                                    const QuadratureConfig& config = {},
                                                    bool estimate_rho = true, bool parallel = true);

}  // namespace exmap::glmm

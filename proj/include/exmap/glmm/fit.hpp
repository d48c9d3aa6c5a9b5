#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exmap/glmm/design.hpp"
#include "exmap/glmm/likelihood.hpp"
#include "exmap/glmm/stats.hpp"

namespace exmap::glmm {

enum class EstimationMethod { Quadrature, PseudoLikelihood };
enum class MethodChoice { Auto, ML, PQL };

std::string_view to_string(EstimationMethod m);
std::string_view to_string(MethodChoice m);
std::optional<MethodChoice> method_from_string(std::string_view s);

struct FitConfig {
  int nodes = 7;
  double grad_tol = 1e-6;
  double step_tol = 1e-8;
  int max_iterations = 500;
  MethodChoice method = MethodChoice::Auto;
  /// Starting variance and correlation; fixed effects start at pooled logits.
  double start_sigma2 = 0.1;
  double start_rho = 0.3;
  std::optional<ModelParams> start;
  /// Hold rho at this value instead of estimating it.
  std::optional<double> fixed_rho;
  bool parallel = true;
  /// PL outer iterations.
  int pql_max_iterations = 200;
  double pql_tol = 1e-8;
};

struct ParameterEstimate {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double stat = 0.0;     // t (fixed effects) or Wald z (variances)
  double p_value = 1.0;  // two-sided for fixed effects, one-sided for variances
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Empirical Bayes deviation of one cluster: posterior mode and posterior
/// standard error of u_k for every indicator k.
struct EbCluster {
  std::string id;
  std::vector<double> u;
  std::vector<double> se;
};

struct FitResult {
  std::size_t K = 0;
  FixedLayout layout = FixedLayout::Main;
  std::vector<std::string> indicator_names;
  ModelParams params;
  std::vector<ParameterEstimate> fixed;
  std::vector<ParameterEstimate> variances;
  std::optional<ParameterEstimate> rho;
  double log_likelihood = 0.0;
  EstimationMethod method = EstimationMethod::Quadrature;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<std::string> diagnostics;
  std::vector<EbCluster> eb;
};

/// Thrown when no estimation method converged; what() carries the report.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(std::string report, std::vector<std::string> attempts)
      : std::runtime_error(std::move(report)), attempts_(std::move(attempts)) {}
  const std::vector<std::string>& attempts() const { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

/// Fixed effects at the pooled per-indicator logits, variances and
/// correlation from the config.
ModelParams starting_values(const StackedDesign& design, const FitConfig& config);

/// Maximum likelihood with nested adaptive Gauss-Hermite quadrature. Throws
/// NonConvergenceError on failure.
FitResult fit_ml(const StackedDesign& design, const FitConfig& config = {});

/// Pseudo-likelihood: repeated linear mixed model fits to the linearized
/// working variate, expanded about the current random-effect predictions.
/// Throws NonConvergenceError on failure.
FitResult fit_pql(const StackedDesign& design, const FitConfig& config = {});

/// Dispatch on config.method. Auto tries ML and falls back to PL.
FitResult fit(const StackedDesign& design, const FitConfig& config = {});

/// Posterior modes and standard errors of the cluster effects at `params`.
std::vector<EbCluster> eb_estimates(const ModelParams& params, const StackedDesign& design);

/// EB probability logistic(beta_k + u_jk) with its Goldstein interval, for
/// main-effect and interaction layouts (covariate terms at x = 0).
GoldsteinInterval eb_probability(const FitResult& fit, std::size_t cluster, std::size_t k);

struct InterceptModelResult {
  FitResult fit;
  double intercept = 0.0;
  double grand_mean_probability = 0.0;
};

/// Refit with an overall intercept and effect-coded indicator contrasts.
InterceptModelResult intercept_model(const StackedDesign& design, const FitConfig& config = {});

}  // namespace exmap::glmm

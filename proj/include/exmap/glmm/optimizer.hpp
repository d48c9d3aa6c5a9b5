#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace exmap::glmm {

/// Returns f(x) and writes the gradient into `grad` (same size as x).
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizerOptions {
  /// Converged when max|g| <= grad_tol * max(1, |f|).
  double grad_tol = 1e-6;
  /// ... or when the step and the relative change of f both fall below these.
  double step_tol = 1e-8;
  double rel_f_tol = 1e-12;
  int max_iterations = 500;
};

struct OptimizerResult {
  std::vector<double> x;
  double f = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// BFGS minimization with a strong-Wolfe line search.
OptimizerResult minimize_bfgs(const ObjectiveFn& fn, std::vector<double> x0, const OptimizerOptions& options = {});

/// Central-difference gradient wrapper for objectives without one.
ObjectiveFn with_numeric_gradient(std::function<double(std::span<const double>)> f, double rel_step = 1e-6);

}  // namespace exmap::glmm

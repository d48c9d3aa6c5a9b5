#pragma once

#include <vector>

#include "exmap/types.hpp"

namespace exmap::glmm {

/// Variance of the standard logistic distribution, pi^2 / 3.
inline constexpr double kLogisticVariance = 3.28986813369645287;

/// Half-width factor making non-overlap of two intervals a 5% test.
inline constexpr double kGoldsteinFactor = 1.39;
inline constexpr double kNormal975 = 1.959963984540054;

/// Throws std::domain_error unless 0 < p < 1.
double logit(double p);
double logistic(double z);
double normal_cdf(double z);

/// sigma2 / (pi^2/3 + sigma2).
double icc(double sigma2);

struct WaldResult {
  double z = 0.0;
  double p_one_sided = 1.0;
  bool significant = false;  // at alpha = 0.05
};

/// z = sigma2 / se with a one-sided p-value.
WaldResult wald_variance_test(double sigma2, double se, double alpha = 0.05);

/// (base - with_cov) / base clamped to [0, 1]; appends a diagnostic when the
/// unclamped value is outside that range. Throws if base <= 0.
double r_squared(double sigma2_base, double sigma2_with_cov, std::vector<Diagnostic>* diag = nullptr);

struct ProbabilityInterval {
  double lo = 0.0;
  double point = 0.0;
  double hi = 0.0;
};

struct GoldsteinInterval {
  ProbabilityInterval adjusted;  // +- 1.39 se
  ProbabilityInterval nominal;   // +- 1.96 se
};

/// Logit-scale estimate and standard error to probability-scale intervals.
GoldsteinInterval goldstein_interval(double point, double se);

}  // namespace exmap::glmm

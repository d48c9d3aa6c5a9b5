#pragma once

#include <vector>

namespace exmap::glmm {

/// Gauss-Hermite rule for integrals of the form \int e^{-x^2} f(x) dx.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// log(weight) + node^2, the factor used after recentring on a mode.
  std::vector<double> log_weight_plus_sq;
};

/// Rule with n nodes (Golub-Welsch). n = 1 gives the Laplace point.
/// Results are cached; the first call for a given n is not thread-safe
/// relative to other first calls, so call it before entering parallel code.
const GaussHermiteRule& gauss_hermite(int n);

}  // namespace exmap::glmm

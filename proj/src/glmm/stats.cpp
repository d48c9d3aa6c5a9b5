#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exmap/glmm/stats.hpp"

namespace exmap::glmm {

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logit: p must lie in (0,1)");
  return std::log(p / (1.0 - p));
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double icc(double sigma2) {
  if (sigma2 < 0.0) throw std::domain_error("icc: negative variance");
  return sigma2 / (kLogisticVariance + sigma2);
}

WaldResult wald_variance_test(double sigma2, double se, double alpha) {
  if (!(se > 0.0)) throw std::domain_error("wald_variance_test: se must be positive");
  WaldResult r;
  r.z = sigma2 / se;
  r.p_one_sided = 1.0 - normal_cdf(r.z);
  r.significant = r.p_one_sided < alpha;
  return r;
}

double r_squared(double base, double with_cov, std::vector<Diagnostic>* diag) {
  if (!(base > 0.0)) throw std::domain_error("r_squared: base variance must be positive");
  const double raw = (base - with_cov) / base;
  const double clamped = std::clamp(raw, 0.0, 1.0);
  if (clamped != raw && diag)
    diag->push_back({0, "R^2 of " + std::to_string(raw) + " clamped to " + std::to_string(clamped)});
  return clamped;
}

GoldsteinInterval goldstein_interval(double point, double se) {
  if (se < 0.0) throw std::domain_error("goldstein_interval: negative standard error");
  GoldsteinInterval g;
  const double p = logistic(point);
  g.adjusted = {logistic(point - kGoldsteinFactor * se), p, logistic(point + kGoldsteinFactor * se)};
  g.nominal = {logistic(point - kNormal975 * se), p, logistic(point + kNormal975 * se)};
  return g;
}

}  // namespace exmap::glmm

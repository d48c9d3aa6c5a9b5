#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "exmap/glmm/fit.hpp"
#include "exmap/glmm/optimizer.hpp"
#include "exmap/glmm/stats.hpp"
#include "fit_common.hpp"

namespace exmap::glmm {

std::string_view to_string(EstimationMethod m) {
  return m == EstimationMethod::Quadrature ? "quadrature" : "pseudo-likelihood";
}

std::string_view to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::Auto: return "auto";
    case MethodChoice::ML: return "ml";
    case MethodChoice::PQL: return "pql";
  }
  return "auto";
}

std::optional<MethodChoice> method_from_string(std::string_view s) {
  if (s == "auto") return MethodChoice::Auto;
  if (s == "ml") return MethodChoice::ML;
  if (s == "pql" || s == "pl") return MethodChoice::PQL;
  return std::nullopt;
}

ModelParams starting_values(const StackedDesign& design, const FitConfig& config) {
  std::vector<double> ys(design.K, 0.0), ns(design.K, 0.0);
  for (const auto& c : design.clusters)
    for (const auto& r : c.rows) {
      ys[static_cast<std::size_t>(r.k)] += static_cast<double>(r.y);
      ns[static_cast<std::size_t>(r.k)] += static_cast<double>(r.n);
    }
  std::vector<double> pooled(design.K);
  for (std::size_t k = 0; k < design.K; ++k) pooled[k] = logit((ys[k] + 0.5) / (ns[k] + 1.0));

  ModelParams p;
  switch (design.layout) {
    case FixedLayout::Main:
      p.beta = pooled;
      break;
    case FixedLayout::Interaction:
      p.beta = pooled;
      p.beta.resize(2 * design.K, 0.0);
      break;
    case FixedLayout::Intercept: {
      double mean = 0.0;
      for (double v : pooled) mean += v / static_cast<double>(design.K);
      p.beta.push_back(mean);
      for (std::size_t l = 0; l + 1 < design.K; ++l) p.beta.push_back(pooled[l] - mean);
      break;
    }
  }
  p.sigma2.assign(design.K, config.start_sigma2);
  p.rho = design.K > 1 ? std::clamp(config.fixed_rho.value_or(config.start_rho),
                                    rho_lower_bound(design.K) + 1e-6, 1.0 - 1e-6)
                       : 0.0;
  if (config.fixed_rho) p.rho = *config.fixed_rho;
  return p;
}

namespace detail {

Eigen::MatrixXd information_inverse(const Eigen::MatrixXd& info, bool* not_pd) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (info + info.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  const double floor = 1e-12 * top;
  bool bad = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= 0.0) bad = true;
    ev(i) = 1.0 / std::max(ev(i), floor);
  }
  if (not_pd) *not_pd = bad;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

FitResult skeleton(const StackedDesign& design) {
  FitResult r;
  r.K = design.K;
  r.layout = design.layout;
  r.indicator_names = design.indicator_names;
  return r;
}

void fill_estimates(FitResult& out, const StackedDesign& design, const ParamTransform& tf,
                    std::span<const double> working, const Eigen::MatrixXd& cov) {
  const auto jac = tf.jacobian_diagonal(working);
  auto se_at = [&](std::size_t i) { return std::abs(jac[i]) * std::sqrt(std::max(0.0, cov(i, i))); };
  const auto names = design.fixed_names();
  const std::size_t p = design.num_fixed();
  out.fixed.clear();
  for (std::size_t i = 0; i < p; ++i) {
    ParameterEstimate e{names[i], out.params.beta[i], se_at(i)};
    e.stat = e.se > 0 ? e.estimate / e.se : 0.0;
    e.p_value = 2.0 * (1.0 - normal_cdf(std::abs(e.stat)));
    e.ci_lo = e.estimate - kNormal975 * e.se;
    e.ci_hi = e.estimate + kNormal975 * e.se;
    out.fixed.push_back(e);
  }
  out.variances.clear();
  for (std::size_t k = 0; k < design.K; ++k) {
    ParameterEstimate e{"sigma2:" + design.indicator_names[k], out.params.sigma2[k], se_at(p + k)};
    // z = sigma2 / se(sigma2) = 1 / se(log sigma2); stays defined at the boundary.
    const double se_log = std::sqrt(std::max(0.0, cov(p + k, p + k)));
    e.stat = se_log > 0 ? 1.0 / se_log : 0.0;
    e.p_value = 1.0 - normal_cdf(e.stat);
    e.ci_lo = std::max(0.0, e.estimate - kNormal975 * e.se);
    e.ci_hi = e.estimate + kNormal975 * e.se;
    out.variances.push_back(e);
  }
  out.rho.reset();
  if (design.K > 1) {
    ParameterEstimate e{"rho", out.params.rho, 0.0};
    if (tf.estimates_rho()) {
      e.se = se_at(p + design.K);
      e.stat = e.se > 0 ? e.estimate / e.se : 0.0;
      e.p_value = 2.0 * (1.0 - normal_cdf(std::abs(e.stat)));
      e.ci_lo = e.estimate - kNormal975 * e.se;
      e.ci_hi = e.estimate + kNormal975 * e.se;
    }
    out.rho = e;
  }
}

}  // namespace detail

FitResult fit_ml(const StackedDesign& design, const FitConfig& config) {
  const ParamTransform tf(design, !config.fixed_rho.has_value());
  const double rho_fixed = config.fixed_rho.value_or(0.0);
  const QuadratureConfig qc{config.nodes};
  ModelParams start = config.start.value_or(starting_values(design, config));
  if (config.fixed_rho) start.rho = *config.fixed_rho;

  auto objective = [&](std::span<const double> x, std::span<double> g) {
    try {
      const auto params = tf.to_natural(x, rho_fixed);
      const auto lg = marginal_log_likelihood_gradient(params, design, qc, tf.estimates_rho(), config.parallel);
      if (!std::isfinite(lg.value)) return std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = -lg.working[i];
      return -lg.value;
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  OptimizerOptions opt;
  opt.grad_tol = config.grad_tol;
  opt.step_tol = config.step_tol;
  opt.max_iterations = config.max_iterations;
  const auto res = minimize_bfgs(objective, tf.to_working(start), opt);
  if (!res.converged || !std::isfinite(res.f)) {
    std::ostringstream msg;
    msg << "maximum likelihood (quadrature, " << config.nodes << " nodes) did not converge: " << res.message
        << " after " << res.iterations << " iterations, |grad|=" << res.grad_inf_norm;
    throw NonConvergenceError(msg.str(), {msg.str()});
  }

  FitResult out = detail::skeleton(design);
  out.params = tf.to_natural(res.x, rho_fixed);
  out.log_likelihood = -res.f;
  out.method = EstimationMethod::Quadrature;
  out.converged = true;
  out.iterations = res.iterations;
  out.gradient_norm = res.grad_inf_norm;
  if (config.nodes == 1) out.diagnostics.push_back("Laplace approximation (1 quadrature node)");
  if (design.K > 1 && out.params.rho < 0.0)
    out.diagnostics.push_back("negative CSH correlation: likelihood evaluated by Laplace approximation");

  // Observed information on the working scale from central differences of
  // the gradient.
  const auto n = static_cast<Eigen::Index>(res.x.size());
  Eigen::MatrixXd info(n, n);
  std::vector<double> x = res.x, gp(res.x.size()), gm(res.x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(x[i]));
    const double orig = x[i];
    x[i] = orig + h;
    objective(x, gp);
    x[i] = orig - h;
    objective(x, gm);
    x[i] = orig;
    for (Eigen::Index j = 0; j < n; ++j) info(j, i) = (gp[j] - gm[j]) / (2.0 * h);
  }
  bool not_pd = false;
  const auto cov = detail::information_inverse(info, &not_pd);
  if (not_pd) out.diagnostics.push_back("observed information not positive definite; standard errors unreliable");
  detail::fill_estimates(out, design, tf, res.x, cov);
  out.eb = eb_estimates(out.params, design);
  return out;
}

FitResult fit(const StackedDesign& design, const FitConfig& config) {
  switch (config.method) {
    case MethodChoice::ML: return fit_ml(design, config);
    case MethodChoice::PQL: return fit_pql(design, config);
    case MethodChoice::Auto: break;
  }
  std::vector<std::string> attempts;
  try {
    return fit_ml(design, config);
  } catch (const NonConvergenceError& e) {
    attempts.insert(attempts.end(), e.attempts().begin(), e.attempts().end());
  }
  try {
    auto r = fit_pql(design, config);
    r.diagnostics.insert(r.diagnostics.begin(), "quadrature fit failed; rerun with pseudo-likelihood: " + attempts[0]);
    return r;
  } catch (const NonConvergenceError& e) {
    attempts.insert(attempts.end(), e.attempts().begin(), e.attempts().end());
  }
  std::string report = "no estimation method converged:";
  for (const auto& a : attempts) report += "\n  - " + a;
  throw NonConvergenceError(report, attempts);
}

InterceptModelResult intercept_model(const StackedDesign& design, const FitConfig& config) {
  InterceptModelResult r;
  FitConfig cfg = config;
  cfg.start.reset();
  r.fit = fit(with_layout(design, FixedLayout::Intercept), cfg);
  r.intercept = r.fit.params.beta[0];
  r.grand_mean_probability = logistic(r.intercept);
  return r;
}

}  // namespace exmap::glmm

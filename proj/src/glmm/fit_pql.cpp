#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "exmap/glmm/fit.hpp"
#include "exmap/glmm/optimizer.hpp"
#include "fit_common.hpp"
#include "kernels.hpp"

namespace exmap::glmm {
namespace {

// Covariance-parameter layout of the working LMM: [log sigma2 | tau].
struct CovTransform {
  std::size_t K;
  bool estimate_rho;
  double fixed_rho;
  double lo;

  ModelParams covariance(std::span<const double> t) const {
    ModelParams p;
    p.sigma2.resize(K);
    for (std::size_t k = 0; k < K; ++k) p.sigma2[k] = std::exp(t[k]);
    if (estimate_rho)
      p.rho = lo + (1.0 - lo) * 0.5 * (1.0 + std::tanh(t[K]));
    else
      p.rho = fixed_rho;
    return p;
  }
};

Eigen::MatrixXd csh_matrix(const ModelParams& p) {
  const auto K = static_cast<Eigen::Index>(p.sigma2.size());
  Eigen::MatrixXd S(K, K);
  for (Eigen::Index a = 0; a < K; ++a)
    for (Eigen::Index b = 0; b < K; ++b)
      S(a, b) = a == b ? p.sigma2[static_cast<std::size_t>(a)]
                       : p.rho * std::sqrt(p.sigma2[static_cast<std::size_t>(a)] * p.sigma2[static_cast<std::size_t>(b)]);
  return S;
}

struct WorkingCluster {
  std::vector<int> k;
  Eigen::MatrixXd X;  // rows x p
  Eigen::VectorXd z;
  Eigen::VectorXd w;
};

struct GlsResult {
  double objective = std::numeric_limits<double>::infinity();  // -2 profile log-likelihood
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;
  bool ok = false;
};

// Profile likelihood of the working LMM z = X beta + Z u + e with
// e ~ N(0, diag(1/w)), beta profiled out by GLS.
GlsResult profile_gls(const std::vector<WorkingCluster>& wc, const Eigen::MatrixXd& S, std::size_t p) {
  const auto pp = static_cast<Eigen::Index>(p);
  std::vector<Eigen::MatrixXd> xtvx(wc.size());
  std::vector<Eigen::VectorXd> xtvz(wc.size());
  std::vector<double> ztvz(wc.size()), logdet(wc.size());
  std::vector<char> ok(wc.size(), 1);
  const auto nc = static_cast<std::ptrdiff_t>(wc.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t jj = 0; jj < nc; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const auto& c = wc[j];
    const auto m = static_cast<Eigen::Index>(c.k.size());
    Eigen::MatrixXd V(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) V(a, b) = S(c.k[static_cast<std::size_t>(a)], c.k[static_cast<std::size_t>(b)]);
    V.diagonal() += c.w.cwiseInverse();
    Eigen::LLT<Eigen::MatrixXd> llt(V);
    if (llt.info() != Eigen::Success) {
      ok[j] = 0;
      continue;
    }
    const Eigen::MatrixXd vx = llt.solve(c.X);
    const Eigen::VectorXd vz = llt.solve(c.z);
    xtvx[j] = c.X.transpose() * vx;
    xtvz[j] = c.X.transpose() * vz;
    ztvz[j] = c.z.dot(vz);
    logdet[j] = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  GlsResult r;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(pp, pp);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(pp);
  double zz = 0.0, ld = 0.0;
  for (std::size_t j = 0; j < wc.size(); ++j) {
    if (!ok[j]) return r;
    A += xtvx[j];
    b += xtvz[j];
    zz += ztvz[j];
    ld += logdet[j];
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return r;
  r.beta = ldlt.solve(b);
  r.beta_cov = ldlt.solve(Eigen::MatrixXd::Identity(pp, pp));
  r.objective = ld + zz - b.dot(r.beta);
  r.ok = std::isfinite(r.objective);
  return r;
}

}  // namespace

FitResult fit_pql(const StackedDesign& design, const FitConfig& config) {
  const std::size_t K = design.K, p = design.num_fixed();
  const bool est_rho = K > 1 && !config.fixed_rho.has_value();
  const double lo = rho_lower_bound(K);
  const CovTransform ct{K, est_rho, config.fixed_rho.value_or(0.0), lo};
  ModelParams cur = config.start.value_or(starting_values(design, config));
  if (config.fixed_rho) cur.rho = *config.fixed_rho;

  std::vector<double> theta(K + (est_rho ? 1 : 0));
  for (std::size_t k = 0; k < K; ++k) theta[k] = std::log(std::max(cur.sigma2[k], 1e-8));
  if (est_rho) {
    const double s = std::clamp(2.0 * (cur.rho - lo) / (1.0 - lo) - 1.0, -0.999999, 0.999999);
    theta[K] = std::atanh(s);
  }

  std::vector<WorkingCluster> wc(design.clusters.size());
  for (std::size_t j = 0; j < wc.size(); ++j) {
    const auto& c = design.clusters[j];
    const auto m = static_cast<Eigen::Index>(c.rows.size());
    wc[j].X.resize(m, static_cast<Eigen::Index>(p));
    wc[j].z.resize(m);
    wc[j].w.resize(m);
    std::vector<double> x(p);
    for (Eigen::Index r = 0; r < m; ++r) {
      wc[j].k.push_back(c.rows[static_cast<std::size_t>(r)].k);
      design.fixed_row(c, c.rows[static_cast<std::size_t>(r)].k, x);
      for (std::size_t i = 0; i < p; ++i) wc[j].X(r, static_cast<Eigen::Index>(i)) = x[i];
    }
  }
  std::vector<Eigen::VectorXd> u(wc.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K)));
  Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(cur.beta.data(), static_cast<Eigen::Index>(p));

  auto linearize = [&] {
    for (std::size_t j = 0; j < wc.size(); ++j) {
      const auto& c = design.clusters[j];
      for (std::size_t r = 0; r < c.rows.size(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        const double n = static_cast<double>(c.rows[r].n), y = static_cast<double>(c.rows[r].y);
        const double eta = wc[j].X.row(ri).dot(beta) + u[j](c.rows[r].k);
        const double pi = detail::inv_logit(eta);
        const double w = std::max(n * pi * (1.0 - pi), 1e-10);
        wc[j].w(ri) = w;
        wc[j].z(ri) = eta + (y - n * pi) / w;
      }
    }
  };

  OptimizerOptions opt;
  opt.grad_tol = config.grad_tol;
  opt.step_tol = config.step_tol;
  opt.max_iterations = config.max_iterations;

  bool converged = false;
  int outer = 0;
  GlsResult gls;
  std::string failure;
  for (; outer < config.pql_max_iterations; ++outer) {
    linearize();
    auto obj = with_numeric_gradient([&](std::span<const double> t) {
      const auto g = profile_gls(wc, csh_matrix(ct.covariance(t)), p);
      return g.ok ? 0.5 * g.objective : std::numeric_limits<double>::infinity();
    });
    const auto res = minimize_bfgs(obj, theta, opt);
    if (!std::isfinite(res.f)) {
      failure = "working linear mixed model has no finite likelihood";
      break;
    }
    const auto S = csh_matrix(ct.covariance(res.x));
    gls = profile_gls(wc, S, p);
    if (!gls.ok) {
      failure = "working GLS system is singular";
      break;
    }
    // BLUPs of the cluster effects.
    std::vector<Eigen::VectorXd> u_new(wc.size());
    for (std::size_t j = 0; j < wc.size(); ++j) {
      const auto& c = wc[j];
      const auto m = static_cast<Eigen::Index>(c.k.size());
      Eigen::MatrixXd V(m, m), SZ(static_cast<Eigen::Index>(K), m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) V(a, b) = S(c.k[static_cast<std::size_t>(a)], c.k[static_cast<std::size_t>(b)]);
        SZ.col(a) = S.col(c.k[static_cast<std::size_t>(a)]);
      }
      V.diagonal() += c.w.cwiseInverse();
      u_new[j] = SZ * V.llt().solve(c.z - c.X * gls.beta);
    }
    double change = (gls.beta - beta).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < theta.size(); ++i) change = std::max(change, std::abs(res.x[i] - theta[i]));
    for (std::size_t j = 0; j < wc.size(); ++j) change = std::max(change, (u_new[j] - u[j]).cwiseAbs().maxCoeff());
    beta = gls.beta;
    theta = res.x;
    u = std::move(u_new);
    if (change < std::sqrt(config.pql_tol)) {
      converged = true;
      ++outer;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "pseudo-likelihood did not converge after " << outer << " outer iterations";
    if (!failure.empty()) msg << ": " << failure;
    throw NonConvergenceError(msg.str(), {msg.str()});
  }

  // Final linearization at the converged point for the standard errors.
  linearize();
  auto prof = [&](std::span<const double> t) {
    const auto g = profile_gls(wc, csh_matrix(ct.covariance(t)), p);
    return g.ok ? 0.5 * g.objective : std::numeric_limits<double>::infinity();
  };
  gls = profile_gls(wc, csh_matrix(ct.covariance(theta)), p);

  FitResult out = detail::skeleton(design);
  const auto cov_nat = ct.covariance(theta);
  out.params.beta.assign(beta.data(), beta.data() + beta.size());
  out.params.sigma2 = cov_nat.sigma2;
  out.params.rho = K > 1 ? cov_nat.rho : 0.0;
  out.method = EstimationMethod::PseudoLikelihood;
  out.converged = true;
  out.iterations = outer;
  out.log_likelihood = marginal_log_likelihood(out.params, design, QuadratureConfig{config.nodes});
  out.diagnostics.push_back("fixed-effect standard errors from the final working GLS fit");

  // Working-scale covariance: beta block from GLS, covariance block from the
  // numeric Hessian of the profile objective.
  const std::size_t q = theta.size();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  {
    std::vector<double> t = theta;
    const double f0 = prof(t);
    for (std::size_t a = 0; a < q; ++a) {
      const double ha = 1e-4 * std::max(1.0, std::abs(theta[a]));
      for (std::size_t b = a; b < q; ++b) {
        const double hb = 1e-4 * std::max(1.0, std::abs(theta[b]));
        double v;
        if (a == b) {
          t[a] = theta[a] + ha;
          const double fp = prof(t);
          t[a] = theta[a] - ha;
          const double fm = prof(t);
          t[a] = theta[a];
          v = (fp - 2.0 * f0 + fm) / (ha * ha);
        } else {
          auto at = [&](double sa, double sb) {
            t[a] = theta[a] + sa * ha;
            t[b] = theta[b] + sb * hb;
            const double f = prof(t);
            t[a] = theta[a];
            t[b] = theta[b];
            return f;
          };
          v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * ha * hb);
        }
        info(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
        info(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
      }
    }
  }
  bool not_pd = false;
  const auto cov_theta = detail::information_inverse(info, &not_pd);
  if (not_pd) out.diagnostics.push_back("profile information not positive definite; variance SEs unreliable");
  const auto n = static_cast<Eigen::Index>(p + q);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  cov.topLeftCorner(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) = gls.beta_cov;
  cov.bottomRightCorner(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q)) = cov_theta;

  const ParamTransform tf(design, est_rho);
  const auto working = tf.to_working(out.params);
  detail::fill_estimates(out, design, tf, working, cov);
  out.eb = eb_estimates(out.params, design);
  return out;
}

}  // namespace exmap::glmm

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "exmap/glmm/likelihood.hpp"
#include "exmap/glmm/quadrature.hpp"
#include "kernels.hpp"

namespace exmap::glmm {

using detail::eval_row;
using detail::kHalfLog2Pi;
using detail::RowTerm;

double rho_lower_bound(std::size_t K) { return K > 1 ? -1.0 / static_cast<double>(K - 1) : 0.0; }

void validate_params(const ModelParams& p, const StackedDesign& d) {
  if (p.beta.size() != d.num_fixed())
    throw std::invalid_argument("params: expected " + std::to_string(d.num_fixed()) + " fixed effects");
  if (p.sigma2.size() != d.K) throw std::invalid_argument("params: expected " + std::to_string(d.K) + " variances");
  for (double s : p.sigma2)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("params: variance components must be >= 0");
  for (double b : p.beta)
    if (!std::isfinite(b)) throw std::invalid_argument("params: non-finite fixed effect");
  if (d.K > 1 && !(p.rho >= rho_lower_bound(d.K) && p.rho <= 1.0))
    throw std::invalid_argument("params: CSH correlation outside its positive semi-definite range");
}

double binomial_log_pmf(std::int64_t y, std::int64_t n, double eta) {
  return static_cast<double>(y) * eta - static_cast<double>(n) * detail::softplus(eta) +
         detail::log_binom_coef(y, n);
}

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Everything about the parameters a cluster kernel needs.
struct Setup {
  const StackedDesign& design;
  const ModelParams& params;
  const GaussHermiteRule& rule;
  std::vector<double> sigma;
  double sr = 0.0, sc = 1.0;  // sqrt(rho), sqrt(1 - rho)
  std::size_t p = 0;
  bool estimate_rho = true;
  std::size_t nparam = 0;  // working parameter count
};

Setup make_setup(const ModelParams& params, const StackedDesign& design, const QuadratureConfig& cfg,
                 bool estimate_rho) {
  Setup s{design, params, gauss_hermite(cfg.nodes), {}, 0.0, 1.0, design.num_fixed(),
          estimate_rho && design.K > 1, 0};
  for (double v : params.sigma2) s.sigma.push_back(std::sqrt(v));
  if (design.K > 1) {
    s.sr = std::sqrt(std::max(0.0, params.rho));
    s.sc = std::sqrt(std::max(0.0, 1.0 - params.rho));
  }
  s.nparam = s.p + design.K + (s.estimate_rho ? 1 : 0);
  return s;
}

/// Nested adaptive Gauss-Hermite evaluation of one cluster for rho >= 0.
/// The random effect of indicator k is sigma_k (sqrt(rho) w + sqrt(1-rho) z_k)
/// with independent standard normal w, z_k. The outer rule integrates w,
/// recentred on the joint mode; for each outer node the K inner rules
/// integrate z_k, recentred on their conditional modes. When `grad` is
/// non-empty it receives d/d[beta | log sigma2 | rho] with the centring held
/// fixed (rho entry before the tau chain rule).
double agq_cluster(const Setup& s, const Cluster& cluster, std::span<double> grad) {
  std::vector<double> xrows;
  const auto rows = detail::prepare_rows(s.params, s.design, cluster, grad.empty() ? nullptr : &xrows);
  const std::size_t R = rows.size();
  std::vector<double> b(R), c(R);
  for (std::size_t r = 0; r < R; ++r) {
    const double sig = s.sigma[static_cast<std::size_t>(rows[r].k)];
    b[r] = sig * s.sr;
    c[r] = sig * s.sc;
  }

  // Joint mode of -w^2/2 - sum z^2/2 + sum ll_r over (w, z_1..z_R).
  double w = 0.0;
  std::vector<double> z(R, 0.0), h(R), D(R), gz(R), dz(R), zt(R);
  auto joint = [&](double wv, std::span<const double> zv) {
    double f = -0.5 * wv * wv;
    for (std::size_t r = 0; r < R; ++r)
      f += -0.5 * zv[r] * zv[r] + eval_row(rows[r], rows[r].a + b[r] * wv + c[r] * zv[r]).ll;
    return f;
  };
  double schur = -1.0;
  double f = joint(w, z);
  for (int it = 0; it < 100; ++it) {
    double gw = -w, hww = -1.0;
    for (std::size_t r = 0; r < R; ++r) {
      const auto e = eval_row(rows[r], rows[r].a + b[r] * w + c[r] * z[r]);
      gw += b[r] * e.score;
      hww -= b[r] * b[r] * e.info;
      gz[r] = -z[r] + c[r] * e.score;
      h[r] = -b[r] * c[r] * e.info;
      D[r] = -1.0 - c[r] * c[r] * e.info;
    }
    schur = hww;
    double rhs = -gw;
    for (std::size_t r = 0; r < R; ++r) {
      schur -= h[r] * h[r] / D[r];
      rhs += h[r] * gz[r] / D[r];
    }
    const double dw = rhs / schur;
    double move = std::abs(dw);
    for (std::size_t r = 0; r < R; ++r) {
      dz[r] = (-gz[r] - h[r] * dw) / D[r];
      move = std::max(move, std::abs(dz[r]));
    }
    if (move < 1e-12) break;
    double t = 1.0, ft = f;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      for (std::size_t r = 0; r < R; ++r) zt[r] = z[r] + t * dz[r];
      ft = joint(w + t * dw, zt);
      if (ft >= f - 1e-13 * std::abs(f)) break;
    }
    w += t * dw;
    z = zt;
    f = ft;
    if (t * move < 1e-11) {
      // Refresh curvature at the final point before leaving.
      double hw2 = -1.0;
      for (std::size_t r = 0; r < R; ++r) {
        const auto e = eval_row(rows[r], rows[r].a + b[r] * w + c[r] * z[r]);
        hw2 -= b[r] * b[r] * e.info;
        h[r] = -b[r] * c[r] * e.info;
        D[r] = -1.0 - c[r] * c[r] * e.info;
      }
      schur = hw2;
      for (std::size_t r = 0; r < R; ++r) schur -= h[r] * h[r] / D[r];
      break;
    }
  }
  const double w_hat = w;
  const double sw = 1.0 / std::sqrt(-schur);

  const auto& rule = s.rule;
  const std::size_t Q = rule.nodes.size();
  const double sqrt2 = std::sqrt(2.0);
  std::vector<double> outer(Q), inner(Q);
  const bool want_grad = !grad.empty();
  // Per (outer node, row): E[score] and E[score * z] under the inner rule.
  std::vector<double> es1(want_grad ? Q * R : 0), esz(want_grad ? Q * R : 0), wm_of(Q);

  for (std::size_t m = 0; m < Q; ++m) {
    const double wm = w_hat + sqrt2 * sw * rule.nodes[m];
    wm_of[m] = wm;
    double total = std::log(sqrt2 * sw) + rule.log_weight_plus_sq[m] - 0.5 * wm * wm - kHalfLog2Pi;
    for (std::size_t r = 0; r < R; ++r) {
      const double base = rows[r].a + b[r] * wm;
      // Conditional mode of z given w = wm, started from the linear predictor.
      double zr = z[r] - (h[r] / D[r]) * (wm - w_hat);
      double info = 0.0;
      for (int it = 0; it < 50; ++it) {
        const auto e = eval_row(rows[r], base + c[r] * zr);
        const double g1 = -zr + c[r] * e.score;
        const double g2 = -1.0 - c[r] * c[r] * e.info;
        const double step = std::clamp(-g1 / g2, -2.0, 2.0);
        zr += step;
        if (std::abs(step) < 1e-12) break;
      }
      info = eval_row(rows[r], base + c[r] * zr).info;
      const double sz = 1.0 / std::sqrt(1.0 + c[r] * c[r] * info);
      double s1 = 0.0, sz1 = 0.0;
      for (std::size_t i = 0; i < Q; ++i) {
        const double zi = zr + sqrt2 * sz * rule.nodes[i];
        const auto e = eval_row(rows[r], base + c[r] * zi);
        inner[i] = std::log(sqrt2 * sz) + rule.log_weight_plus_sq[i] - 0.5 * zi * zi - kHalfLog2Pi + e.ll;
      }
      const double lg = log_sum_exp(inner);
      total += lg;
      if (want_grad) {
        for (std::size_t i = 0; i < Q; ++i) {
          const double zi = zr + sqrt2 * sz * rule.nodes[i];
          const double pi = std::exp(inner[i] - lg);
          const double sc = eval_row(rows[r], base + c[r] * zi).score;
          s1 += pi * sc;
          sz1 += pi * sc * zi;
        }
        es1[m * R + r] = s1;
        esz[m * R + r] = sz1;
      }
    }
    outer[m] = total;
  }
  const double value = log_sum_exp(outer);

  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t p = s.p, K = s.design.K;
    for (std::size_t m = 0; m < Q; ++m) {
      const double P = std::exp(outer[m] - value);
      if (P == 0.0) continue;
      for (std::size_t r = 0; r < R; ++r) {
        const double s1 = es1[m * R + r], sz1 = esz[m * R + r];
        const auto k = static_cast<std::size_t>(rows[r].k);
        const double* x = &xrows[r * p];
        for (std::size_t j = 0; j < p; ++j) grad[j] += P * s1 * x[j];
        const double sig = s.sigma[k];
        grad[p + k] += P * 0.5 * sig * (s.sr * wm_of[m] * s1 + s.sc * sz1);
        if (s.estimate_rho && s.sr > 0.0 && s.sc > 0.0)
          grad[p + K] += P * sig * (wm_of[m] * s1 / (2.0 * s.sr) - sz1 / (2.0 * s.sc));
      }
    }
  }
  return value;
}

double eval_cluster(const Setup& s, const Cluster& c, std::span<double> grad) {
  if (s.design.K > 1 && s.params.rho < 0.0) return detail::cluster_laplace(s.params, s.design, c);
  return agq_cluster(s, c, grad);
}

}  // namespace

double cluster_log_likelihood(const ModelParams& params, const StackedDesign& design, const Cluster& cluster,
                              const QuadratureConfig& config) {
  validate_params(params, design);
  const auto s = make_setup(params, design, config, true);
  return eval_cluster(s, cluster, {});
}

double marginal_log_likelihood_serial(const ModelParams& params, const StackedDesign& design,
                                      const QuadratureConfig& config) {
  validate_params(params, design);
  const auto s = make_setup(params, design, config, true);
  double total = 0.0;
  for (const auto& c : design.clusters) total += eval_cluster(s, c, {});
  return total;
}

double marginal_log_likelihood(const ModelParams& params, const StackedDesign& design,
                               const QuadratureConfig& config) {
  validate_params(params, design);
  const auto s = make_setup(params, design, config, true);
  const auto n = static_cast<std::ptrdiff_t>(design.clusters.size());
  std::vector<double> terms(design.clusters.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t j = 0; j < n; ++j) terms[j] = eval_cluster(s, design.clusters[j], {});
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

double independent_binomial_log_likelihood(const ModelParams& params, const StackedDesign& design) {
  double total = 0.0;
  for (const auto& c : design.clusters)
    for (const auto& r : detail::prepare_rows(params, design, c)) total += eval_row(r, r.a).ll;
  return total;
}

ParamTransform::ParamTransform(const StackedDesign& design, bool estimate_rho)
    : p_(design.num_fixed()), K_(design.K), estimate_rho_(estimate_rho && design.K > 1),
      lo_(rho_lower_bound(design.K)) {}

std::vector<double> ParamTransform::to_working(const ModelParams& params) const {
  std::vector<double> w(params.beta);
  for (double s2 : params.sigma2) w.push_back(std::log(std::max(s2, 1e-300)));
  if (estimate_rho_) {
    const double u = std::clamp(2.0 * (params.rho - lo_) / (1.0 - lo_) - 1.0, -1.0 + 1e-15, 1.0 - 1e-15);
    w.push_back(std::atanh(u));
  }
  return w;
}

ModelParams ParamTransform::to_natural(std::span<const double> w, double fixed_rho) const {
  ModelParams p;
  p.beta.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p_));
  for (std::size_t k = 0; k < K_; ++k) p.sigma2.push_back(std::exp(w[p_ + k]));
  p.rho = estimate_rho_ ? lo_ + (1.0 - lo_) * 0.5 * (1.0 + std::tanh(w[p_ + K_])) : (K_ > 1 ? fixed_rho : 0.0);
  return p;
}

std::vector<double> ParamTransform::jacobian_diagonal(std::span<const double> w) const {
  std::vector<double> j(size(), 1.0);
  for (std::size_t k = 0; k < K_; ++k) j[p_ + k] = std::exp(w[p_ + k]);
  if (estimate_rho_) {
    const double t = std::tanh(w[p_ + K_]);
    j[p_ + K_] = (1.0 - lo_) * 0.5 * (1.0 - t * t);
  }
  return j;
}

LikelihoodGradient marginal_log_likelihood_gradient(const ModelParams& params, const StackedDesign& design,
                                                    const QuadratureConfig& config, bool estimate_rho,
                                                    bool parallel) {
  validate_params(params, design);
  const ParamTransform tf(design, estimate_rho);
  const auto s = make_setup(params, design, config, estimate_rho);
  const std::size_t P = s.nparam;
  LikelihoodGradient out;
  out.working.assign(P, 0.0);

  const bool analytic = config.nodes >= 3 && (design.K == 1 || (params.rho > 0.0 && params.rho < 1.0));
  if (analytic) {
    const auto n = static_cast<std::ptrdiff_t>(design.clusters.size());
    std::vector<double> terms(design.clusters.size());
    std::vector<double> grads(design.clusters.size() * P);
    auto body = [&](std::ptrdiff_t j) {
      terms[j] = agq_cluster(s, design.clusters[j], std::span<double>(&grads[j * P], P));
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
      for (std::ptrdiff_t j = 0; j < n; ++j) body(j);
    } else {
      for (std::ptrdiff_t j = 0; j < n; ++j) body(j);
    }
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      out.value += terms[j];
      for (std::size_t i = 0; i < P; ++i) out.working[i] += grads[j * P + i];
    }
    // d/d log sigma2 already; rho entry still needs d rho / d tau.
    if (tf.estimates_rho()) {
      const auto w = tf.to_working(params);
      out.working[P - 1] *= tf.jacobian_diagonal(w)[P - 1];
    }
  } else {
    auto w = tf.to_working(params);
    auto f = [&](std::span<const double> x) {
      const auto np = tf.to_natural(x, params.rho);
      return parallel ? marginal_log_likelihood(np, design, config)
                      : marginal_log_likelihood_serial(np, design, config);
    };
    out.value = f(w);
    for (std::size_t i = 0; i < P; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(w[i]));
      const double orig = w[i];
      w[i] = orig + h;
      const double fp = f(w);
      w[i] = orig - h;
      const double fm = f(w);
      w[i] = orig;
      out.working[i] = (fp - fm) / (2.0 * h);
    }
  }

  const auto w = tf.to_working(params);
  const auto jac = tf.jacobian_diagonal(w);
  out.natural.assign(design.num_fixed() + design.K + (design.K > 1 ? 1 : 0),
                     std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < P; ++i) out.natural[i] = out.working[i] / jac[i];
  return out;
}

}  // namespace exmap::glmm

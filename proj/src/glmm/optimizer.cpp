#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "exmap/glmm/optimizer.hpp"

namespace exmap::glmm {

namespace {

using Vec = Eigen::VectorXd;

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Vec g;
};

struct LineSearch {
  const ObjectiveFn& fn;
  const Vec& x;
  const Vec& dir;
  int& evals;

  Probe at(double alpha) const {
    Probe p;
    p.alpha = alpha;
    Vec xt = x + alpha * dir;
    p.g.resize(x.size());
    p.f = fn(std::span<const double>(xt.data(), static_cast<std::size_t>(xt.size())),
             std::span<double>(p.g.data(), static_cast<std::size_t>(p.g.size())));
    ++evals;
    p.slope = std::isfinite(p.f) ? p.g.dot(dir) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(p.slope)) p.f = std::numeric_limits<double>::infinity();
    return p;
  }
};

double cubic_min(const Probe& a, const Probe& b) {
  // Minimizer of the cubic interpolating (f, slope) at both ends, clamped
  // to the interior of the bracket.
  const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0 && std::isfinite(disc)) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double cand = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    if (std::isfinite(cand)) t = cand;
  }
  const double margin = 0.1 * (hi - lo);
  return std::clamp(t, lo + margin, hi - margin);
}

// Strong Wolfe line search (Nocedal & Wright, algorithms 3.5 and 3.6).
bool wolfe_search(const LineSearch& ls, const Probe& start, double alpha0, Probe& out) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  Probe prev = start;
  double alpha = alpha0;
  auto zoom = [&](Probe lo, Probe hi) {
    for (int i = 0; i < 40; ++i) {
      const Probe p = ls.at(std::isfinite(hi.f) ? cubic_min(lo, hi) : 0.5 * (lo.alpha + hi.alpha));
      if (!std::isfinite(p.f) || p.f > start.f + c1 * p.alpha * start.slope || p.f >= lo.f) {
        hi = p;
      } else {
        if (std::abs(p.slope) <= -c2 * start.slope) {
          out = p;
          return true;
        }
        if (p.slope * (hi.alpha - lo.alpha) >= 0) hi = lo;
        lo = p;
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    if (lo.alpha > 0 && lo.f < start.f) {
      out = lo;
      return true;
    }
    return false;
  };
  for (int i = 0; i < 30; ++i) {
    const Probe p = ls.at(alpha);
    if (!std::isfinite(p.f)) {
      alpha = 0.5 * (prev.alpha + alpha);
      if (alpha - prev.alpha < 1e-20) return false;
      continue;
    }
    if (p.f > start.f + c1 * alpha * start.slope || (i > 0 && p.f >= prev.f)) return zoom(prev, p);
    if (std::abs(p.slope) <= -c2 * start.slope) {
      out = p;
      return true;
    }
    if (p.slope >= 0) return zoom(p, prev);
    prev = p;
    alpha *= 2.0;
  }
  out = prev;
  return prev.alpha > 0;
}

}  // namespace

OptimizerResult minimize_bfgs(const ObjectiveFn& fn, std::vector<double> x0, const OptimizerOptions& opt) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  OptimizerResult res;
  Vec x = Eigen::Map<Vec>(x0.data(), n);
  Vec g(n);
  double f = fn(std::span<const double>(x.data(), x0.size()), std::span<double>(g.data(), x0.size()));
  res.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    res.x = x0;
    res.f = f;
    res.message = "objective not finite at the starting point";
    return res;
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  auto finish = [&](bool ok, std::string msg) {
    res.x.assign(x.data(), x.data() + n);
    res.f = f;
    res.grad_inf_norm = g.cwiseAbs().maxCoeff();
    res.converged = ok;
    res.message = std::move(msg);
    return res;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    if (g.cwiseAbs().maxCoeff() <= opt.grad_tol * std::max(1.0, std::abs(f)))
      return finish(true, "gradient tolerance reached");

    Vec dir = -H * g;
    if (dir.dot(g) >= 0) {
      H.setIdentity();
      dir = -g;
    }
    Probe start{0.0, f, g.dot(dir), g};
    double alpha0 = 1.0;
    if (!scaled) alpha0 = std::min(1.0, 1.0 / std::max(1e-12, g.cwiseAbs().maxCoeff()));
    const LineSearch ls{fn, x, dir, res.evaluations};
    Probe next;
    if (!wolfe_search(ls, start, alpha0, next)) {
      if (!H.isIdentity()) {
        H.setIdentity();
        continue;
      }
      const bool near = g.cwiseAbs().maxCoeff() <= std::sqrt(opt.grad_tol) * std::max(1.0, std::abs(f));
      return finish(near, near ? "line search stalled near a stationary point" : "line search failed");
    }
    const Vec s = next.alpha * dir;
    const Vec y = next.g - g;
    const double df = f - next.f;
    x += s;
    f = next.f;
    g = next.g;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double r = 1.0 / sy;
      const Vec Hy = H * y;
      H += ((sy + y.dot(Hy)) * r * r) * (s * s.transpose()) - r * (Hy * s.transpose() + s * Hy.transpose());
    }
    if (s.cwiseAbs().maxCoeff() < opt.step_tol && std::abs(df) <= opt.rel_f_tol * std::max(1.0, std::abs(f))) {
      res.iterations = it + 1;
      return finish(true, "step and objective change below tolerance");
    }
  }
  res.iterations = opt.max_iterations;
  const bool ok = g.cwiseAbs().maxCoeff() <= opt.grad_tol * std::max(1.0, std::abs(f));
  return finish(ok, ok ? "gradient tolerance reached" : "iteration limit reached");
}

ObjectiveFn with_numeric_gradient(std::function<double(std::span<const double>)> f, double rel_step) {
  return [f = std::move(f), rel_step](std::span<const double> x, std::span<double> grad) {
    std::vector<double> xt(x.begin(), x.end());
    const double f0 = f(xt);
    if (!std::isfinite(f0)) return f0;
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double h = rel_step * std::max(1.0, std::abs(xt[i]));
      const double orig = xt[i];
      xt[i] = orig + h;
      const double fp = f(xt);
      xt[i] = orig - h;
      const double fm = f(xt);
      xt[i] = orig;
      grad[i] = (fp - fm) / (2.0 * h);
    }
    return f0;
  };
}

}  // namespace exmap::glmm

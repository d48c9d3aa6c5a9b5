#include <doctest.h>

#include <cmath>
#include <numbers>

#include "exmap/glmm/likelihood.hpp"
#include "exmap/glmm/quadrature.hpp"
#include "oracles.hpp"

using namespace exmap::glmm;

TEST_CASE("gauss-hermite rules") {
  for (int n : {1, 2, 5, 7, 12}) {
    const auto& r = gauss_hermite(n);
    REQUIRE(r.nodes.size() == static_cast<std::size_t>(n));
    // Exact for polynomials up to degree 2n - 1: the moments of e^{-x^2}.
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0, mag = 0;
      for (int i = 0; i < n; ++i) {
        s += r.weights[i] * std::pow(r.nodes[i], deg);
        mag += std::abs(r.weights[i] * std::pow(r.nodes[i], deg));
      }
      const double exact = deg % 2 ? 0.0 : std::tgamma((deg + 1) / 2.0);
      CHECK(std::abs(s - exact) <= 1e-11 * mag);
    }
    for (int i = 0; i < n; ++i)
      CHECK(r.log_weight_plus_sq[i] == doctest::Approx(std::log(r.weights[i]) + r.nodes[i] * r.nodes[i]));
  }
  const auto& two = gauss_hermite(2);
  CHECK(std::abs(two.nodes[0]) == doctest::Approx(std::sqrt(0.5)));
  CHECK(two.weights[0] == doctest::Approx(std::sqrt(std::numbers::pi) / 2));
}

TEST_CASE("binomial log pmf") {
  for (double eta : {-30.0, -3.0, 0.0, 0.7, 25.0})
    for (auto [y, n] : {std::pair<int, int>{0, 0}, {0, 10}, {3, 10}, {10, 10}, {400, 5000}})
      CHECK(binomial_log_pmf(y, n, eta) == doctest::Approx(oracle::log_binom(y, n, eta)).epsilon(1e-12));
}

TEST_CASE("parameter validation and transform") {
  oracle::SimSpec spec{{-2, -1, 0}, {0.2, 0.3, 0.4}, 0.5, 10, 10, 30, 1, true};
  const auto d = oracle::simulate(spec);
  CHECK(rho_lower_bound(1) == 0.0);
  CHECK(rho_lower_bound(3) == -0.5);
  ModelParams p{{-2, -1, 0}, {0.2, 0.3, 0.4}, 0.5};
  CHECK_NOTHROW(validate_params(p, d));
  auto bad = p;
  bad.rho = -0.6;
  CHECK_THROWS_AS(validate_params(bad, d), std::invalid_argument);
  bad = p;
  bad.sigma2[1] = -1e-3;
  CHECK_THROWS_AS(validate_params(bad, d), std::invalid_argument);
  bad = p;
  bad.beta.pop_back();
  CHECK_THROWS_AS(marginal_log_likelihood(bad, d), std::invalid_argument);

  ParamTransform t(d, true);
  CHECK(t.size() == 7);
  const auto w = t.to_working(p);
  const auto back = t.to_natural(w);
  CHECK(back.rho == doctest::Approx(0.5));
  for (int k = 0; k < 3; ++k) CHECK(back.sigma2[k] == doctest::Approx(p.sigma2[k]));
  const auto jac = t.jacobian_diagonal(w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto wp = w, wm = w;
    wp[i] += 1e-6;
    wm[i] -= 1e-6;
    const auto np = t.to_natural(wp), nm = t.to_natural(wm);
    std::vector<double> a = np.beta, b = nm.beta;
    a.insert(a.end(), np.sigma2.begin(), np.sigma2.end());
    b.insert(b.end(), nm.sigma2.begin(), nm.sigma2.end());
    a.push_back(np.rho);
    b.push_back(nm.rho);
    CHECK((a[i] - b[i]) / 2e-6 == doctest::Approx(jac[i]).epsilon(1e-6));
  }
  ParamTransform fixed(d, false);
  CHECK(fixed.size() == 6);
  CHECK(fixed.to_natural(fixed.to_working(p), 0.25).rho == 0.25);
}

TEST_CASE("quadrature matches dense-grid integration, one indicator") {
  oracle::SimSpec spec{{-1.5}, {0.6}, 0.0, 30, 1, 300, 11, true};
  const auto d = oracle::simulate(spec);
  const ModelParams p{{-1.4}, {0.5}, 0.0};
  for (const auto& c : d.clusters)
    CHECK(cluster_log_likelihood(p, d, c) == doctest::Approx(oracle::cluster_ll_grid(d, c, p)).epsilon(1e-6).scale(1));
}

TEST_CASE("quadrature matches dense-grid integration, two indicators") {
  oracle::SimSpec spec{{-1.5, -2.5}, {0.4, 0.7}, 0.6, 6, 5, 200, 12, false};
  const auto d = oracle::simulate(spec);
  for (double rho : {0.0, 0.3, 0.8, -0.4}) {
    const ModelParams p{{-1.4, -2.4}, {0.35, 0.8}, rho};
    for (const auto& c : d.clusters) {
      const double grid = oracle::cluster_ll_grid(d, c, p, 401, 8.0);
      // 7 nodes per dimension in the nested rule; negative rho uses Laplace.
      const double tol = rho < 0 ? 1e-2 : 1e-4;
      CHECK(cluster_log_likelihood(p, d, c) == doctest::Approx(grid).epsilon(tol).scale(1));
    }
  }
}

TEST_CASE("limits: vanishing variance and zero correlation") {
  oracle::SimSpec spec{{-2, -1, -0.5}, {0.3, 0.3, 0.3}, 0.7, 40, 20, 400, 13, false};
  const auto d = oracle::simulate(spec);

  const ModelParams tiny{{-2, -1, -0.5}, {1e-12, 1e-12, 1e-12}, 0.5};
  CHECK(marginal_log_likelihood(tiny, d) ==
        doctest::Approx(independent_binomial_log_likelihood(tiny, d)).epsilon(1e-8).scale(1));

  const ModelParams indep{{-2.1, -0.9, -0.4}, {0.2, 0.4, 0.3}, 0.0};
  double separate = 0.0;
  for (int k = 0; k < 3; ++k) {
    const std::vector<int> keep = {k};
    const auto dk = select_indicators(d, keep);
    separate += marginal_log_likelihood({{indep.beta[k]}, {indep.sigma2[k]}, 0.0}, dk);
  }
  CHECK(marginal_log_likelihood(indep, d) == doctest::Approx(separate).epsilon(1e-9).scale(1));
}

TEST_CASE("cluster order, serial reference and determinism") {
  oracle::SimSpec spec{{-2, -1, -0.5}, {0.3, 0.4, 0.2}, 0.6, 200, 20, 400, 14, false};
  const auto d = oracle::simulate(spec);
  const ModelParams p{{-2, -1, -0.5}, {0.3, 0.4, 0.2}, 0.6};
  const double par = marginal_log_likelihood(p, d);
  CHECK(par == marginal_log_likelihood_serial(p, d));
  CHECK(par == marginal_log_likelihood(p, d));
  auto rev = d;
  std::reverse(rev.clusters.begin(), rev.clusters.end());
  CHECK(marginal_log_likelihood(p, rev) == doctest::Approx(par).epsilon(1e-12));
  double sum = 0;
  for (const auto& c : d.clusters) sum += cluster_log_likelihood(p, d, c);
  CHECK(sum == doctest::Approx(par).epsilon(1e-12));
}

TEST_CASE("gradient agrees with finite differences") {
  oracle::SimSpec spec{{-2, -1, -0.5}, {0.3, 0.4, 0.2}, 0.6, 60, 20, 400, 15, false};
  auto d = oracle::simulate(spec);
  for (std::size_t j = 0; j < d.clusters.size(); ++j) d.clusters[j].x = std::sin(static_cast<double>(j));
  d = with_layout(d, FixedLayout::Interaction);
  const ModelParams p{{-1.9, -1.1, -0.4, 0.1, -0.2, 0.05}, {0.25, 0.45, 0.15}, 0.55};
  const ParamTransform t(d, true);
  const auto g = marginal_log_likelihood_gradient(p, d);
  CHECK(g.value == doctest::Approx(marginal_log_likelihood(p, d)).epsilon(1e-12));
  const auto w = t.to_working(p);
  const auto gs = marginal_log_likelihood_gradient(p, d, {}, true, false);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double h = 1e-5;
    auto wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    const double fd = (marginal_log_likelihood(t.to_natural(wp), d) - marginal_log_likelihood(t.to_natural(wm), d)) / (2 * h);
    CHECK(g.working[i] == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
    CHECK(gs.working[i] == g.working[i]);
  }
  const auto jac = t.jacobian_diagonal(w);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(g.natural[i] * jac[i] == doctest::Approx(g.working[i]));
}

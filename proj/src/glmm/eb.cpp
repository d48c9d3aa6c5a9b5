#include <cmath>
#include <stdexcept>

#include "exmap/glmm/fit.hpp"
#include "kernels.hpp"

namespace exmap::glmm {

std::vector<EbCluster> eb_estimates(const ModelParams& params, const StackedDesign& design) {
  validate_params(params, design);
  const auto A = detail::csh_sqrt(params);
  const auto K = static_cast<Eigen::Index>(design.K);
  std::vector<EbCluster> out(design.clusters.size());
  const auto nc = static_cast<std::ptrdiff_t>(design.clusters.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < nc; ++j) {
    const auto& c = design.clusters[static_cast<std::size_t>(j)];
    const auto rows = detail::prepare_rows(params, design, c);
    const auto mode = detail::posterior_mode(rows, A);
    const Eigen::VectorXd u = A * mode.v;
    const Eigen::MatrixXd cov = A * mode.neg_hessian.ldlt().solve(Eigen::MatrixXd::Identity(K, K)) * A.transpose();
    EbCluster e{c.id, std::vector<double>(design.K), std::vector<double>(design.K)};
    for (Eigen::Index k = 0; k < K; ++k) {
      e.u[static_cast<std::size_t>(k)] = u(k);
      e.se[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, cov(k, k)));
    }
    out[static_cast<std::size_t>(j)] = std::move(e);
  }
  return out;
}

GoldsteinInterval eb_probability(const FitResult& fit, std::size_t cluster, std::size_t k) {
  if (cluster >= fit.eb.size() || k >= fit.K) throw std::out_of_range("eb_probability: index out of range");
  StackedDesign shape;
  shape.K = fit.K;
  shape.layout = fit.layout;
  const Cluster at_zero{};
  std::vector<double> x(shape.num_fixed());
  shape.fixed_row(at_zero, static_cast<int>(k), x);
  double eta = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) eta += x[i] * fit.params.beta[i];
  const auto& e = fit.eb[cluster];
  return goldstein_interval(eta + e.u[k], e.se[k]);
}

}  // namespace exmap::glmm

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "kernels.hpp"

namespace exmap::glmm::detail {

std::vector<RowTerm> prepare_rows(const ModelParams& params, const StackedDesign& design,
                                  const Cluster& cluster, std::vector<double>* fixed_rows) {
  const std::size_t p = design.num_fixed();
  std::vector<double> x(p);
  std::vector<RowTerm> rows;
  rows.reserve(cluster.rows.size());
  if (fixed_rows) fixed_rows->clear();
  for (const auto& r : cluster.rows) {
    design.fixed_row(cluster, r.k, x);
    double a = 0.0;
    for (std::size_t i = 0; i < p; ++i) a += x[i] * params.beta[i];
    rows.push_back({r.k, static_cast<double>(r.y), static_cast<double>(r.n), a, log_binom_coef(r.y, r.n)});
    if (fixed_rows) fixed_rows->insert(fixed_rows->end(), x.begin(), x.end());
  }
  return rows;
}

Eigen::MatrixXd csh_sqrt(const ModelParams& params) {
  const auto K = static_cast<Eigen::Index>(params.sigma2.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(K, K, params.rho);
  C.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd A = es.eigenvectors() * root.asDiagonal();
  for (Eigen::Index k = 0; k < K; ++k) A.row(k) *= std::sqrt(std::max(0.0, params.sigma2[k]));
  return A;
}

PosteriorMode posterior_mode(std::span<const RowTerm> rows, const Eigen::MatrixXd& A) {
  const auto m = A.cols();
  PosteriorMode out;
  out.v = Eigen::VectorXd::Zero(m);

  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad, Eigen::MatrixXd* nh) {
    const Eigen::VectorXd u = A * v;
    double f = -0.5 * v.squaredNorm();
    if (grad) *grad = -v;
    if (nh) *nh = Eigen::MatrixXd::Identity(m, m);
    for (const auto& r : rows) {
      const auto e = eval_row(r, r.a + u(r.k));
      f += e.ll;
      if (grad) *grad += e.score * A.row(r.k).transpose();
      if (nh) *nh += e.info * A.row(r.k).transpose() * A.row(r.k);
    }
    return f;
  };

  Eigen::VectorXd g;
  Eigen::MatrixXd nh;
  double f = objective(out.v, &g, &nh);
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd step = nh.ldlt().solve(g);
    double t = 1.0;
    Eigen::VectorXd trial;
    double ft = f;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      trial = out.v + t * step;
      ft = objective(trial, nullptr, nullptr);
      if (ft >= f - 1e-12 * std::abs(f)) break;
    }
    const double move = (trial - out.v).cwiseAbs().maxCoeff();
    out.v = trial;
    f = objective(out.v, &g, &nh);
    if (move < 1e-11 || g.cwiseAbs().maxCoeff() < 1e-10) {
      out.converged = true;
      break;
    }
  }
  out.neg_hessian = nh;
  out.log_joint = f;
  return out;
}

double cluster_laplace(const ModelParams& params, const StackedDesign& design, const Cluster& cluster) {
  const auto rows = prepare_rows(params, design, cluster);
  const auto A = csh_sqrt(params);
  const auto mode = posterior_mode(rows, A);
  const double logdet = mode.neg_hessian.llt().matrixLLT().diagonal().array().log().sum() * 2.0;
  return mode.log_joint - 0.5 * logdet;
}

}  // namespace exmap::glmm::detail

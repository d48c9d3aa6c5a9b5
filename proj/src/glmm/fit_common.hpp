#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exmap/glmm/fit.hpp"

namespace exmap::glmm::detail {

/// Covariance from a symmetric observed-information matrix. Eigenvalues
/// below a relative floor are raised to it, which turns flat directions
/// into very large variances; `*not_pd` reports whether that happened for
/// a non-positive eigenvalue.
Eigen::MatrixXd information_inverse(const Eigen::MatrixXd& info, bool* not_pd);

/// Fill fixed/variances/rho of `out` from natural-scale estimates and the
/// working-scale covariance (delta method through the diagonal transform).
void fill_estimates(FitResult& out, const StackedDesign& design, const ParamTransform& tf,
                    std::span<const double> working, const Eigen::MatrixXd& working_cov);

FitResult skeleton(const StackedDesign& design);

}  // namespace exmap::glmm::detail

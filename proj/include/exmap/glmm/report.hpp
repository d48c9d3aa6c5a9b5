#pragma once

#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "exmap/glmm/fit.hpp"

namespace exmap::glmm {

nlohmann::json to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

/// Plain-text report: fixed effects (estimate, SE, t, 95% CI, probability at
/// x = 0) and the variance components (estimate, SE, Wald z, ICC, R^2 when a
/// covariate-free base fit is supplied, CSH correlation).
void write_fit_report(std::ostream& out, const FitResult& fit, const FitResult* base = nullptr);

nlohmann::json to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig defaults = {});

}  // namespace exmap::glmm

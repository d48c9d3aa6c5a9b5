#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "exmap/aggregate.hpp"
#include "exmap/types.hpp"

namespace exmap::glmm {

/// How indicator dummies enter the fixed part of the linear predictor.
enum class FixedLayout {
  Main,         // beta_k * d_k
  Interaction,  // beta_k * d_k + beta_{K+k} * d_k * x_j
  Intercept,    // beta_0 + effect-coded contrasts of the K indicators
};

struct DesignRow {
  int k = 0;  // indicator index, 0-based
  std::int64_t y = 0;
  std::int64_t n = 0;
};

struct Cluster {
  std::string id;
  double x = 0.0;               // cluster covariate (standardized)
  std::vector<DesignRow> rows;  // sorted by k, at most one row per k
};

/// Stacked multivariate layout: each cluster contributes one binomial row
/// per indicator, identified by its dummy index.
struct StackedDesign {
  std::size_t K = 0;
  FixedLayout layout = FixedLayout::Main;
  std::vector<std::string> indicator_names;  // size K
  std::vector<Cluster> clusters;

  std::size_t num_fixed() const { return layout == FixedLayout::Interaction ? 2 * K : K; }
  std::size_t num_rows() const;
  /// Fixed-effect design vector of row (cluster c, indicator k); size num_fixed().
  void fixed_row(const Cluster& c, int k, std::span<double> out) const;
  /// Names of the fixed-effect coefficients, in parameter order.
  std::vector<std::string> fixed_names() const;
};

/// Rows from selected aggregates of one subject. Indicators listed in
/// `indicators` become k = 0..K-1. A row with zero trials is dropped with a
/// diagnostic. With a covariate map the layout is Interaction and clusters
/// missing from the map are dropped with a diagnostic. Throws
/// std::invalid_argument for fewer than two clusters.
StackedDesign build_design(std::span<const InstitutionAggregate> aggregates,
                           std::span<const Indicator> indicators,
                           const std::map<std::string, double>* covariate = nullptr,
                           std::vector<Diagnostic>* diag = nullptr);

/// Same data, different fixed-effects layout.
StackedDesign with_layout(StackedDesign design, FixedLayout layout);

/// Keep only the listed indicator indices, renumbered in the given order.
StackedDesign select_indicators(const StackedDesign& design, std::span<const int> keep);

/// Stable content hash (FNV-1a) used as fit cache key.
std::uint64_t design_hash(const StackedDesign& design);

std::string_view to_string(FixedLayout layout);

}  // namespace exmap::glmm

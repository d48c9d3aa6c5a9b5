#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "exmap/aggregate.hpp"
#include "exmap/glmm/fit.hpp"
#include "exmap/types.hpp"

namespace exmap {

inline constexpr int kBundleSchemaVersion = 1;

enum class Measure { HighlyCited, HighlyBookmarked };

std::string_view to_string(Measure m);
std::optional<Measure> measure_from_string(std::string_view s);

struct BundleEntry {
  std::string id;
  std::string name;
  std::string country;
  std::optional<double> lat;
  std::optional<double> lon;
  std::int64_t papers = 0;
  double probability = 0.0;
  double lo = 0.0;  // 1.39-SE interval
  double hi = 0.0;
  int rank = 0;
  std::optional<int> rank_delta;
  bool above_mean = false;
  bool below_mean = false;
  /// Probabilities for every Mendeley audience, keyed by sector name.
  std::map<std::string, double> siblings;

  bool operator==(const BundleEntry&) const = default;
};

struct ExportBundle {
  int schema_version = kBundleSchemaVersion;
  std::string subject;
  Measure measure = Measure::HighlyBookmarked;
  std::optional<Sector> audience;
  std::optional<std::string> covariate;
  double grand_mean_probability = 0.0;
  /// The audience's 90th-percentile reader count in the subject is 0 or 1,
  /// so single readers decide membership.
  bool low_threshold = false;
  std::vector<BundleEntry> entries;

  bool operator==(const ExportBundle&) const = default;
};

enum class Significance { Above, Below, Neither };

/// Above iff lo > grand mean, below iff hi < grand mean.
Significance significance_flags(double lo, double hi, double grand_mean);

/// Ranks 1..n by probability descending, ties broken by id ascending.
std::map<std::string, int> assign_ranks(std::span<const std::pair<std::string, double>> scores);

/// rank_without - rank_with per institution; throws std::invalid_argument
/// when the two rankings do not cover the same institutions.
std::map<std::string, int> rank_delta(const std::map<std::string, int>& with_cov,
                                      const std::map<std::string, int>& without_cov);

/// Fits of one subject: the seven-indicator model without a covariate, the
/// interaction models per covariate name, and the grand means.
struct SubjectFits {
  std::string subject;
  glmm::FitResult base;
  std::map<std::string, glmm::FitResult> with_covariate;
  /// Intercept-model probability over the six Mendeley indicators.
  double bookmarked_grand_mean = 0.0;
  /// Per audience; missing means false.
  std::map<Sector, bool> low_threshold;
};

/// One bundle per (measure, audience) for the base fit and for every
/// covariate fit. Missing geo rows give null coordinates and a diagnostic.
std::vector<ExportBundle> build_bundles(const SubjectFits& fits,
                                        std::span<const InstitutionAggregate> aggregates,
                                        const GeoTable& geo, std::vector<Diagnostic>* diag = nullptr);

nlohmann::json to_json(const ExportBundle& bundle);
/// Throws std::invalid_argument with the first schema violation.
ExportBundle bundle_from_json(const nlohmann::json& j);
/// All schema and invariant violations; empty when valid.
std::vector<std::string> validate_bundle(const nlohmann::json& j);

/// File name of a bundle, e.g. "1600__highly_bookmarked__Students__GNI.json".
std::string bundle_file_name(const ExportBundle& bundle);

}  // namespace exmap

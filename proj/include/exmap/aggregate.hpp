#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exmap/indicators.hpp"
#include "exmap/ingest.hpp"

namespace exmap {

inline const std::string kAllSubjects = "All subject areas";

/// Two-digit subject area of a 4-digit code, e.g. 1605 -> "1600".
std::string subject_area(int asjc);

/// Success totals of one institution in one subject. The paper count is
/// shared by all seven indicators.
struct CellTotals {
  std::int64_t n = 0;
  std::array<double, kIndicatorCount> raw_sum{};
};

using CellKey = std::pair<std::string, std::string>;  // (institution, subject)

/// Whole counting: every listed institution receives the paper. A paper
/// with several codes in one area is counted once there, with the largest of
/// its weights in that area; "All subject areas" uses all_subjects.
/// Throws ConsistencyError when weights and corpus are misaligned.
std::map<CellKey, CellTotals> accumulate(std::span<const PaperRecord> corpus,
                                         std::span<const IndicatorWeights> weights);

/// Round half away from zero, clamp to [0, n].
std::int64_t round_successes(double raw_sum, std::int64_t n);

struct InstitutionAggregate {
  std::string institution_id;
  std::string subject;
  std::string country;
  std::int64_t n = 0;
  std::array<double, kIndicatorCount> raw_sum{};
  std::array<std::int64_t, kIndicatorCount> y{};

  bool operator==(const InstitutionAggregate&) const = default;
};

struct GeoRow {
  std::string institution_id;
  std::string name;
  std::string country;
  std::optional<double> lat;
  std::optional<double> lon;
};

using GeoTable = std::map<std::string, GeoRow>;

/// country -> covariate name -> raw value
using CovariateTable = std::map<std::string, std::map<std::string, double>>;

inline const std::array<std::string, 5> kCovariateNames = {"NOI", "NOR", "GNI", "MEG", "CPI"};

/// Rounded aggregates, one per (institution, subject), country from geo.
std::vector<InstitutionAggregate> build_aggregates(const std::map<CellKey, CellTotals>& totals,
                                                   const GeoTable& geo);

struct SelectionCriteria {
  std::int64_t min_papers = 500;
  std::size_t min_institutions = 50;
  std::size_t min_subjects_for_all = 5;
};

struct Exclusion {
  std::string institution_id;  // empty when a whole subject is dropped
  std::string subject;
  std::string reason;
};

struct SelectionResult {
  std::vector<InstitutionAggregate> kept;
  std::vector<Exclusion> exclusions;
};

/// Applies, in order: the per-subject paper minimum, the per-subject
/// institution minimum, and for "All subject areas" the requirement of
/// qualifying presence (>= min_papers) in at least min_subjects_for_all
/// retained subjects. Idempotent and independent of input order.
SelectionResult select_institutions(std::span<const InstitutionAggregate> aggregates,
                                    const SelectionCriteria& criteria = {});

/// z-scores with mean 0 and sample standard deviation 1. Throws
/// std::invalid_argument when fewer than two distinct values are present.
std::vector<double> standardize_covariate(std::span<const double> values);

/// Standardized covariate per institution over the distinct institutions of
/// `aggregates`. Institutions whose country lacks the covariate are absent.
std::map<std::string, double> standardized_covariate(std::span<const InstitutionAggregate> aggregates,
                                                     const CovariateTable& table,
                                                     const std::string& name);

// Delimited file formats.
void write_aggregates(std::ostream& out, std::span<const InstitutionAggregate> aggregates,
                      const CovariateTable& covariates);
std::vector<InstitutionAggregate> read_aggregates(std::istream& in);
void write_exclusions(std::ostream& out, std::span<const Exclusion> exclusions);

/// Tab- or comma-separated (country, NOI, NOR, GNI, MEG, CPI) with header.
CovariateTable read_covariates(const std::filesystem::path& path);
/// (institution_id, name, country, lat, lon) with header; empty lat/lon allowed.
GeoTable read_geo(const std::filesystem::path& path);

}  // namespace exmap

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "exmap/ingest.hpp"

namespace exmap {

/// Share of papers selected as "top" in every bucket, expressed in parts per
/// million so that bucket arithmetic stays exact.
struct TopShare {
  std::int64_t ppm = 100'000;  // 10%

  static TopShare from_fraction(double share);
  double fraction() const { return static_cast<double>(ppm) / 1e6; }
};

/// Hazen percentile (i - 0.5) / n * 100 of the i-th smallest value. Tied
/// values receive the mean percentile of their rank range. Output order
/// matches input order. Throws std::invalid_argument on empty input.
std::vector<double> hazen_percentiles(std::span<const std::int64_t> values);

/// Fractional top-share membership: a paper whose value lies strictly above
/// the threshold gets 1, papers tied at the threshold split the remaining
/// mass equally, everything else gets 0. The weights sum to share * n.
std::vector<double> fractional_top_share(std::span<const std::int64_t> values,
                                         TopShare share = {});

struct CitationValue {
  std::int64_t citations = 0;
  double sjr = 0.0;
};

/// Binary top-share membership by (citations desc, sjr desc). The first
/// floor(share * n) papers are selected; a group tied on both keys that
/// straddles the cut is selected entirely.
std::vector<std::uint8_t> citation_top_share(std::span<const CitationValue> values,
                                             TopShare share = {});

/// Uniform percentile on (0, 100) for an unretrievable paper in one subject
/// code. Depends only on (seed, paper_id, asjc).
double random_percentile(std::uint64_t seed, std::string_view paper_id, int asjc);

/// One draw per subject code of the paper, in asjc_codes order.
std::vector<double> random_percentiles(std::uint64_t seed, const PaperRecord& paper);

/// Bucket member: either an observed value or a random percentile.
struct BucketMember {
  std::size_t paper = 0;  // index into the corpus
  std::int64_t value = 0;
  double random_percentile = -1.0;  // >= 0 marks an unretrievable paper
  bool is_random() const { return random_percentile >= 0.0; }
};

struct BucketKey {
  int year = 0;
  int asjc = 0;
  auto operator<=>(const BucketKey&) const = default;
};

/// Papers sharing one (publication year, subject code) combination. A paper
/// with k codes appears in k buckets.
struct Bucket {
  BucketKey key;
  std::vector<std::size_t> papers;  // corpus indices, ascending
};

std::vector<Bucket> build_buckets(std::span<const PaperRecord> corpus);

/// Sector membership in one bucket. Observed papers go through
/// fractional_top_share among themselves; random-percentile papers count as
/// above the threshold iff their percentile exceeds 100 * (1 - share).
std::vector<double> bucket_sector_weights(std::span<const BucketMember> members,
                                          TopShare share = {});

/// Per paper, per indicator weights: one weight per subject code plus the
/// maximum over codes.
struct IndicatorWeights {
  std::vector<int> asjc;  // same order as PaperRecord::asjc_codes
  std::array<std::vector<double>, kIndicatorCount> per_asjc;
  std::array<double, kIndicatorCount> all_subjects{};
};

struct WeightsConfig {
  std::uint64_t seed = 0;
  TopShare share{};
};

/// Reference implementation: buckets processed one after another.
std::vector<IndicatorWeights> compute_weights_serial(std::span<const PaperRecord> corpus,
                                                     const WeightsConfig& config);

/// Buckets processed in parallel; identical output to the serial version.
std::vector<IndicatorWeights> compute_weights(std::span<const PaperRecord> corpus,
                                              const WeightsConfig& config);

/// Weights for a single sector across a prepared set of buckets, exposed for
/// testing the per-sector rule in isolation.
std::vector<IndicatorWeights> sector_weights(std::span<const PaperRecord> corpus,
                                             std::span<const Bucket> buckets, Sector sector,
                                             const WeightsConfig& config);

/// Line-delimited output: one JSON object per (paper, indicator) with keys
/// paper_id, indicator, asjc (array), weight (array), all_subjects.
void write_weights(std::ostream& out, std::span<const PaperRecord> corpus,
                   std::span<const IndicatorWeights> weights);

/// Inverse of write_weights. `corpus` supplies paper order and codes.
std::vector<IndicatorWeights> read_weights(std::istream& in, std::span<const PaperRecord> corpus);

struct ThresholdRow {
  int asjc = 0;
  Sector sector = Sector::Total;
  std::int64_t threshold = 0;  // 90th percentile
  double mean = 0.0;
  std::size_t papers = 0;
  bool low_threshold = false;  // threshold <= 1
};

/// Smallest value whose (untied) Hazen rank percentile reaches
/// 100 * (1 - share). Throws on empty input.
std::int64_t percentile_threshold(std::span<const std::int64_t> values, TopShare share = {});

/// One row per (asjc, sector) over papers with observed reader data in the
/// given buckets (normally one publication year).
std::vector<ThresholdRow> threshold_report(std::span<const PaperRecord> corpus,
                                           std::span<const Bucket> buckets, TopShare share = {});

/// Tab-delimited table with one line per subject code and a
/// (threshold, average) column pair per sector, followed by the paper count.
void write_threshold_report(std::ostream& out, std::span<const ThresholdRow> rows);

/// Share of a citation bucket actually selected minus the nominal share,
/// used to flag buckets where ties could not be resolved.
struct SelectionDeviation {
  BucketKey key;
  double selected_share = 0.0;
};

std::vector<SelectionDeviation> citation_selection_deviations(std::span<const PaperRecord> corpus,
                                                              std::span<const Bucket> buckets,
                                                              TopShare share = {},
                                                              double tolerance = 0.01);

}  // namespace exmap

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exmap/types.hpp"

namespace exmap {

/// One publication as read from the corpus and, after merging, enriched with
/// its reader counts.
struct PaperRecord {
  std::string paper_id;
  std::optional<std::string> doi;
  int year = 0;
  std::vector<int> asjc_codes;            // sorted, unique, 4-digit
  std::vector<std::string> institution_ids;  // sorted, unique
  std::int64_t citations = 0;
  double sjr = 0.0;
  /// Raw status string -> count, as delivered by the corpus line or fetcher.
  std::optional<std::map<std::string, std::int64_t>> raw_readers;
  SectorCounts reader_counts{};
  /// No reader data could be obtained; indicator stage assigns random
  /// percentiles for the reader sectors.
  bool unretrievable = false;

  bool operator==(const PaperRecord&) const = default;
};

struct YearWindow {
  int first = 1900;
  int last = 2100;
  bool contains(int y) const { return y >= first && y <= last; }
};

struct ParseResult {
  std::vector<PaperRecord> records;
  std::vector<Diagnostic> diagnostics;
};

/// Lowercase, trim, and drop a leading resolver prefix ("https://doi.org/",
/// "http://doi.org/", "http://dx.doi.org/", "doi:"). Empty result -> nullopt.
std::optional<std::string> normalize_doi(std::string_view raw);

/// Parse one JSON object per line. Blank lines are ignored; malformed lines
/// produce a diagnostic carrying the 1-based line number and are skipped.
ParseResult parse_paper_records(std::istream& in, const YearWindow& window = {});

/// Throws InputError if the file cannot be opened.
ParseResult parse_paper_file(const std::filesystem::path& path, const YearWindow& window = {});

/// Single-line JSON serialization, the inverse of the parser.
std::string to_json_line(const PaperRecord& record);

struct DuplicateGroup {
  std::string doi;
  std::vector<std::string> paper_ids;
};

struct DedupeResult {
  std::vector<PaperRecord> records;        // same order as input
  std::vector<DuplicateGroup> duplicates;  // sorted by doi
  std::vector<std::string> fetch_set;      // DOIs to query, sorted
  std::size_t papers_with_doi = 0;         // before dedupe
  std::size_t duplicated_papers = 0;
};

/// Records sharing a DOI keep their place in the corpus but lose the DOI, so
/// they are neither queried nor matched to reader data.
DedupeResult dedupe_dois(std::vector<PaperRecord> records);

/// Tab-separated (doi, paper_ids, count); ids joined with ','.
void write_duplicate_report(std::ostream& out, const std::vector<DuplicateGroup>& groups);

/// Maps a raw reader status string to its sector. "Unspecified" and "Other"
/// map to nullopt silently; unknown strings map to nullopt and, if `diag` is
/// given, append a warning.
std::optional<Sector> map_status_to_sector(std::string_view raw,
                                           std::vector<Diagnostic>* diag = nullptr);

/// The thirteen documented status strings.
const std::vector<std::string>& documented_statuses();

/// Fold raw status counts into sector counts. Total absorbs every status.
SectorCounts sector_counts_from_raw(const std::map<std::string, std::int64_t>& raw,
                                    std::vector<Diagnostic>* diag = nullptr);

}  // namespace exmap

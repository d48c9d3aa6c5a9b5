#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exmap/aggregate.hpp"
#include "exmap/glmm/fit.hpp"
#include "exmap/ingest.hpp"

namespace exmap {

namespace fs = std::filesystem;

/// Everything a run depends on. Relative paths in a config file are resolved
/// against the directory of that file.
struct RunConfig {
  fs::path corpus;
  fs::path covariates;
  fs::path geo;
  fs::path fetch_fixture;      // empty: no fixture
  std::string fetch_url;       // used when no fixture is given
  double fetch_rate = 0.0;     // requests per second, 0 = unlimited
  std::size_t fetch_in_flight = 4;
  YearWindow years{};
  std::uint64_t seed = 1;
  double top_share = 0.1;
  SelectionCriteria selection{};
  glmm::FitConfig model{};
  std::vector<std::string> covariate_names{kCovariateNames.begin(), kCovariateNames.end()};
  fs::path output = "out";
  int jobs = 0;  // 0: library default
};

/// Throws InputError for unreadable or malformed files.
RunConfig load_run_config(const fs::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Throws InputError naming the first missing input of the stage.
void check_inputs(const RunConfig& config, std::string_view stage);

struct StageSummary {
  std::size_t diagnostics = 0;
  std::vector<std::string> notes;
};

/// ingest/corpus.jsonl, ingest/duplicates.tsv, ingest/diagnostics.tsv
StageSummary run_ingest(const RunConfig& config);
/// indicators/weights.jsonl, thresholds.tsv, low_threshold.tsv,
/// aggregates.tsv, exclusions.tsv
StageSummary run_indicators(const RunConfig& config);
/// fit/<subject>/{base,<covariate>,intercept}.json and report.txt, with a
/// cache under fit/cache keyed by design and model config. A subject whose
/// fit fails is listed in fit/failures.tsv and the run continues.
StageSummary run_fit(const RunConfig& config);
/// export/bundles/*.json and export/manifest.json
StageSummary run_export(const RunConfig& config);

/// File-system friendly subject name ("All subject areas" -> "all").
std::string subject_slug(const std::string& subject);

/// FNV-1a of a file's bytes as 16 hex digits.
std::string file_hash(const fs::path& path);

}  // namespace exmap

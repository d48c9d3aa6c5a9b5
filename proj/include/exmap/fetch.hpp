#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "exmap/ingest.hpp"

namespace exmap {

enum class FetchStatus { Found, NoReader, Error };

std::string_view to_string(FetchStatus s);
std::optional<FetchStatus> fetch_status_from_string(std::string_view s);

/// Answer for one request against a reader-count service.
struct FetchResponse {
  FetchStatus status = FetchStatus::Error;
  std::map<std::string, std::int64_t> counts;  // raw status -> count
};

struct FetchOutcome {
  std::string doi;
  FetchStatus status = FetchStatus::Error;
  std::map<std::string, std::int64_t> per_status_counts;
  int round = 1;

  bool operator==(const FetchOutcome&) const = default;
};

/// One DOI per request. Implementations must be safe to call from several
/// threads at once.
class ReaderFetcher {
 public:
  virtual ~ReaderFetcher() = default;
  virtual FetchResponse fetch(const std::string& doi) = 0;
};

/// Deterministic backend reading a JSON fixture:
///   { "<doi>": {"status": "found"|"no_reader"|"error",
///               "counts": {"Librarian": 2, ...},
///               "fail_requests": 1 }, ... }
/// `fail_requests` makes the first N requests for that DOI fail before the
/// stored answer is returned. DOIs absent from the fixture answer error.
class FixtureFetcher final : public ReaderFetcher {
 public:
  struct Entry {
    FetchResponse response;
    int fail_requests = 0;
  };

  explicit FixtureFetcher(std::map<std::string, Entry> entries);
  static std::unique_ptr<FixtureFetcher> from_file(const std::filesystem::path& path);

  FetchResponse fetch(const std::string& doi) override;

  /// Number of requests issued for `doi` so far.
  int request_count(const std::string& doi) const;

 private:
  std::map<std::string, Entry> entries_;
  mutable std::mutex mu_;
  std::map<std::string, int> requests_;
};

/// HTTP backend. Issues GET {base_url}/readers?doi=<urlencoded doi> with an
/// optional bearer token and expects a JSON body
///   {"status": "found"|"no_reader", "counts": {...}}.
/// Any transport failure or non-200 answer is reported as an error.
class HttpFetcher final : public ReaderFetcher {
 public:
  struct Options {
    std::string base_url;  // e.g. "http://127.0.0.1:8080"
    std::string token;
    double max_requests_per_second = 0.0;  // 0 = unlimited
    std::chrono::milliseconds timeout{10000};
  };

  explicit HttpFetcher(Options options);
  FetchResponse fetch(const std::string& doi) override;

 private:
  void throttle();

  Options options_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_slot_{};
};

/// Queries every DOI once, then retries every round-1 error exactly once.
/// The result does not depend on the order in which requests complete.
std::map<std::string, FetchOutcome> fetch_reader_counts(const std::vector<std::string>& dois,
                                                        ReaderFetcher& fetcher,
                                                        std::size_t max_in_flight = 4);

/// Fills reader_counts from the outcomes. Records without DOI, without an
/// outcome, or whose outcome is an error become unretrievable, unless the
/// corpus line itself carried reader data.
std::vector<PaperRecord> merge_reader_data(std::vector<PaperRecord> records,
                                           const std::map<std::string, FetchOutcome>& outcomes,
                                           std::vector<Diagnostic>* diag = nullptr);

}  // namespace exmap

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "exmap/fetch.hpp"

namespace exmap {

using nlohmann::json;

std::string_view to_string(FetchStatus s) {
  switch (s) {
    case FetchStatus::Found: return "found";
    case FetchStatus::NoReader: return "no_reader";
    case FetchStatus::Error: return "error";
  }
  return "error";
}

std::optional<FetchStatus> fetch_status_from_string(std::string_view s) {
  if (s == "found") return FetchStatus::Found;
  if (s == "no_reader") return FetchStatus::NoReader;
  if (s == "error") return FetchStatus::Error;
  return std::nullopt;
}

FixtureFetcher::FixtureFetcher(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

std::unique_ptr<FixtureFetcher> FixtureFetcher::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open fetch fixture " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed fetch fixture " + path.string() + ": " + e.what());
  }
  std::map<std::string, Entry> entries;
  for (const auto& [raw_doi, v] : j.items()) {
    auto doi = normalize_doi(raw_doi);
    if (!doi) continue;
    Entry e;
    auto status = fetch_status_from_string(v.value("status", std::string("error")));
    if (!status) throw InputError("unknown status for " + raw_doi + " in fetch fixture");
    e.response.status = *status;
    if (*status != FetchStatus::Error && v.contains("counts"))
      e.response.counts = v.at("counts").get<std::map<std::string, std::int64_t>>();
    e.fail_requests = v.value("fail_requests", 0);
    entries.emplace(*doi, std::move(e));
  }
  return std::make_unique<FixtureFetcher>(std::move(entries));
}

FetchResponse FixtureFetcher::fetch(const std::string& doi) {
  int nth;
  {
    std::lock_guard lock(mu_);
    nth = ++requests_[doi];
  }
  auto it = entries_.find(doi);
  if (it == entries_.end() || nth <= it->second.fail_requests) return {FetchStatus::Error, {}};
  return it->second.response;
}

int FixtureFetcher::request_count(const std::string& doi) const {
  std::lock_guard lock(mu_);
  auto it = requests_.find(doi);
  return it == requests_.end() ? 0 : it->second;
}

namespace {

// Issues fetcher.fetch for every doi with at most `workers` concurrent
// requests; results land at the DOI's index.
std::vector<FetchResponse> run_round(const std::vector<std::string>& dois, ReaderFetcher& fetcher,
                                     std::size_t workers) {
  std::vector<FetchResponse> results(dois.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < dois.size(); i = next++) {
      try {
        results[i] = fetcher.fetch(dois[i]);
      } catch (const std::exception&) {
        results[i] = {FetchStatus::Error, {}};
      }
      if (results[i].status == FetchStatus::Error) results[i].counts.clear();
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(dois.size(), 1));
  if (workers == 1) {
    work();
    return results;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  pool.clear();
  return results;
}

}  // namespace

std::map<std::string, FetchOutcome> fetch_reader_counts(const std::vector<std::string>& dois,
                                                        ReaderFetcher& fetcher,
                                                        std::size_t max_in_flight) {
  std::vector<std::string> unique = dois;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::map<std::string, FetchOutcome> out;
  std::vector<std::string> retry;
  auto first = run_round(unique, fetcher, max_in_flight);
  for (std::size_t i = 0; i < unique.size(); ++i) {
    out[unique[i]] = {unique[i], first[i].status, std::move(first[i].counts), 1};
    if (first[i].status == FetchStatus::Error) retry.push_back(unique[i]);
  }
  auto second = run_round(retry, fetcher, max_in_flight);
  for (std::size_t i = 0; i < retry.size(); ++i)
    out[retry[i]] = {retry[i], second[i].status, std::move(second[i].counts), 2};
  return out;
}

std::vector<PaperRecord> merge_reader_data(std::vector<PaperRecord> records,
                                           const std::map<std::string, FetchOutcome>& outcomes,
                                           std::vector<Diagnostic>* diag) {
  for (auto& r : records) {
    const FetchOutcome* outcome = nullptr;
    if (r.doi) {
      if (auto it = outcomes.find(*r.doi); it != outcomes.end()) outcome = &it->second;
    }
    if (outcome && outcome->status != FetchStatus::Error) {
      r.raw_readers = outcome->per_status_counts;
      r.reader_counts = sector_counts_from_raw(*r.raw_readers, diag);
      r.unretrievable = false;
    } else if (r.raw_readers) {
      // Reader data shipped with the corpus line.
      r.reader_counts = sector_counts_from_raw(*r.raw_readers, diag);
      r.unretrievable = false;
    } else {
      r.reader_counts = {};
      r.unretrievable = true;
    }
  }
  return records;
}

}  // namespace exmap

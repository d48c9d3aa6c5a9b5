#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "exmap/fetch.hpp"

namespace exmap {

HttpFetcher::HttpFetcher(Options options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw std::invalid_argument("HttpFetcher: empty base_url");
}

void HttpFetcher::throttle() {
  if (options_.max_requests_per_second <= 0.0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / options_.max_requests_per_second));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

FetchResponse HttpFetcher::fetch(const std::string& doi) {
  throttle();
  httplib::Client client(options_.base_url);
  const auto secs = options_.timeout.count() / 1000;
  const auto usecs = (options_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  httplib::Headers headers;
  if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);

  httplib::Params params{{"doi", doi}};
  auto res = client.Get("/readers", params, headers);
  if (!res || res->status != 200) return {FetchStatus::Error, {}};
  try {
    auto j = nlohmann::json::parse(res->body);
    auto status = fetch_status_from_string(j.value("status", std::string("error")));
    if (!status || *status == FetchStatus::Error) return {FetchStatus::Error, {}};
    FetchResponse out{*status, {}};
    if (j.contains("counts")) out.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
    return out;
  } catch (const nlohmann::json::exception&) {
    return {FetchStatus::Error, {}};
  }
}

}  // namespace exmap

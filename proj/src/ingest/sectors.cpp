#include <algorithm>
#include <array>
#include <utility>

#include "exmap/ingest.hpp"

namespace exmap {

namespace {

constexpr std::array<std::string_view, kSectorCount> kSectorNames = {
    "Lecturers", "Librarians", "Professors", "Researchers", "Students", "Total"};

constexpr std::array<std::string_view, kIndicatorCount> kIndicatorNames = {
    "Lecturers", "Librarians", "Professors", "Researchers", "Students", "AllReaders", "Citations"};

struct StatusEntry {
  std::string_view raw;
  std::optional<Sector> sector;
};

constexpr std::array<StatusEntry, 13> kStatusTable = {{
    {"Lecturer", Sector::Lecturers},
    {"Lecturer > Senior Lecturer", Sector::Lecturers},
    {"Librarian", Sector::Librarians},
    {"Professor", Sector::Professors},
    {"Professor > Associate Professor", Sector::Professors},
    {"Researcher", Sector::Researchers},
    {"Student > Bachelor", Sector::Students},
    {"Student > Doctoral Student", Sector::Students},
    {"Student > Master", Sector::Students},
    {"Student > Ph. D. Student", Sector::Students},
    {"Student > Postgraduate", Sector::Students},
    {"Unspecified", std::nullopt},
    {"Other", std::nullopt},
}};

}  // namespace

std::string_view to_string(Sector s) { return kSectorNames[index_of(s)]; }
std::string_view to_string(Indicator i) { return kIndicatorNames[index_of(i)]; }

std::optional<Sector> sector_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kSectorNames.size(); ++i)
    if (kSectorNames[i] == name) return static_cast<Sector>(i);
  return std::nullopt;
}

std::optional<Indicator> indicator_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kIndicatorNames.size(); ++i)
    if (kIndicatorNames[i] == name) return static_cast<Indicator>(i);
  return std::nullopt;
}

const std::vector<std::string>& documented_statuses() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> v;
    for (const auto& e : kStatusTable) v.emplace_back(e.raw);
    return v;
  }();
  return all;
}

std::optional<Sector> map_status_to_sector(std::string_view raw, std::vector<Diagnostic>* diag) {
  for (const auto& e : kStatusTable)
    if (e.raw == raw) return e.sector;
  if (diag) diag->push_back({0, "unknown reader status '" + std::string(raw) + "'"});
  return std::nullopt;
}

SectorCounts sector_counts_from_raw(const std::map<std::string, std::int64_t>& raw,
                                    std::vector<Diagnostic>* diag) {
  SectorCounts out{};
  for (const auto& [status, count] : raw) {
    out[index_of(Sector::Total)] += count;
    if (auto s = map_status_to_sector(status, diag)) out[index_of(*s)] += count;
  }
  return out;
}

}  // namespace exmap

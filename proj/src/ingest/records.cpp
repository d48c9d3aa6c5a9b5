#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "exmap/ingest.hpp"

namespace exmap {

using nlohmann::json;

std::optional<std::string> normalize_doi(std::string_view raw) {
  std::string s(raw);
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::string_view prefix :
       {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/", "doi:"}) {
    if (s.starts_with(prefix)) {
      s.erase(0, prefix.size());
      break;
    }
  }
  if (s.empty()) return std::nullopt;
  return s;
}

namespace {

PaperRecord record_from_json(const json& j, const YearWindow& window) {
  PaperRecord r;
  r.paper_id = j.at("paper_id").get<std::string>();
  if (r.paper_id.empty()) throw std::invalid_argument("empty paper_id");

  if (auto it = j.find("doi"); it != j.end() && !it->is_null())
    r.doi = normalize_doi(it->get<std::string>());

  r.year = j.at("year").get<int>();
  if (!window.contains(r.year))
    throw std::invalid_argument("year " + std::to_string(r.year) + " outside window");

  for (const auto& c : j.at("asjc")) {
    const int code = c.get<int>();
    if (code < 1000 || code > 9999) throw std::invalid_argument("asjc code not 4-digit");
    r.asjc_codes.push_back(code);
  }
  std::sort(r.asjc_codes.begin(), r.asjc_codes.end());
  r.asjc_codes.erase(std::unique(r.asjc_codes.begin(), r.asjc_codes.end()), r.asjc_codes.end());
  if (r.asjc_codes.empty()) throw std::invalid_argument("no asjc codes");

  for (const auto& i : j.at("institutions")) r.institution_ids.push_back(i.get<std::string>());
  std::sort(r.institution_ids.begin(), r.institution_ids.end());
  r.institution_ids.erase(std::unique(r.institution_ids.begin(), r.institution_ids.end()),
                          r.institution_ids.end());
  if (r.institution_ids.empty()) throw std::invalid_argument("no institutions");

  r.citations = j.at("citations").get<std::int64_t>();
  if (r.citations < 0) throw std::invalid_argument("negative citation count");
  r.sjr = j.value("sjr", 0.0);
  if (!(r.sjr >= 0.0)) throw std::invalid_argument("negative sjr");

  if (auto it = j.find("readers"); it != j.end() && !it->is_null()) {
    std::map<std::string, std::int64_t> raw;
    for (const auto& [status, count] : it->items()) {
      const auto n = count.get<std::int64_t>();
      if (n < 0) throw std::invalid_argument("negative reader count");
      raw[status] = n;
    }
    r.reader_counts = sector_counts_from_raw(raw);
    r.raw_readers = std::move(raw);
  }
  r.unretrievable = j.value("unretrievable", false);
  return r;
}

}  // namespace

ParseResult parse_paper_records(std::istream& in, const YearWindow& window) {
  ParseResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    try {
      out.records.push_back(record_from_json(json::parse(line), window));
    } catch (const std::exception& e) {
      out.diagnostics.push_back({lineno, e.what()});
    }
  }
  if (in.bad()) throw InputError("read error after line " + std::to_string(lineno));
  return out;
}

ParseResult parse_paper_file(const std::filesystem::path& path, const YearWindow& window) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  return parse_paper_records(in, window);
}

std::string to_json_line(const PaperRecord& r) {
  json j;
  j["paper_id"] = r.paper_id;
  j["doi"] = r.doi ? json(*r.doi) : json(nullptr);
  j["year"] = r.year;
  j["asjc"] = r.asjc_codes;
  j["institutions"] = r.institution_ids;
  j["citations"] = r.citations;
  j["sjr"] = r.sjr;
  if (r.raw_readers) j["readers"] = *r.raw_readers;
  if (r.unretrievable) j["unretrievable"] = true;
  return j.dump();
}

}  // namespace exmap

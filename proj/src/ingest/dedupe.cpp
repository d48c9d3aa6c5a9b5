#include <algorithm>
#include <map>
#include <ostream>

#include "exmap/ingest.hpp"

namespace exmap {

DedupeResult dedupe_dois(std::vector<PaperRecord> records) {
  DedupeResult out;
  std::map<std::string, std::vector<std::size_t>> by_doi;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].doi) {
      by_doi[*records[i].doi].push_back(i);
      ++out.papers_with_doi;
    }
  }
  for (auto& [doi, idx] : by_doi) {
    if (idx.size() == 1) {
      out.fetch_set.push_back(doi);
      continue;
    }
    DuplicateGroup g{doi, {}};
    for (std::size_t i : idx) {
      g.paper_ids.push_back(records[i].paper_id);
      records[i].doi.reset();
    }
    std::sort(g.paper_ids.begin(), g.paper_ids.end());
    out.duplicated_papers += idx.size();
    out.duplicates.push_back(std::move(g));
  }
  out.records = std::move(records);
  return out;
}

void write_duplicate_report(std::ostream& out, const std::vector<DuplicateGroup>& groups) {
  out << "doi\tpaper_ids\tcount\n";
  for (const auto& g : groups) {
    out << g.doi << '\t';
    for (std::size_t i = 0; i < g.paper_ids.size(); ++i) out << (i ? "," : "") << g.paper_ids[i];
    out << '\t' << g.paper_ids.size() << '\n';
  }
}

}  // namespace exmap

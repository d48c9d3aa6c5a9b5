#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include "exmap/indicators.hpp"

namespace exmap {

std::vector<ThresholdRow> threshold_report(std::span<const PaperRecord> corpus,
                                           std::span<const Bucket> buckets, TopShare share) {
  // Buckets of several years with the same code are pooled.
  std::map<int, std::vector<std::size_t>> by_code;
  for (const auto& b : buckets) {
    auto& v = by_code[b.key.asjc];
    for (std::size_t idx : b.papers)
      if (!corpus[idx].unretrievable) v.push_back(idx);
  }
  std::vector<ThresholdRow> rows;
  for (const auto& [code, papers] : by_code) {
    for (Sector s : kAllSectors) {
      ThresholdRow row{code, s, 0, 0.0, papers.size(), false};
      if (!papers.empty()) {
        std::vector<std::int64_t> values;
        values.reserve(papers.size());
        for (std::size_t idx : papers) values.push_back(corpus[idx].reader_counts[index_of(s)]);
        row.threshold = percentile_threshold(values, share);
        row.mean = static_cast<double>(std::accumulate(values.begin(), values.end(), std::int64_t{0})) /
                   static_cast<double>(values.size());
      }
      row.low_threshold = row.threshold <= 1;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_threshold_report(std::ostream& out, std::span<const ThresholdRow> rows) {
  // Column order: Librarians, Lecturers, Professors,
  // Researchers, Students, Total.
  constexpr std::array<Sector, kSectorCount> cols = {Sector::Librarians, Sector::Lecturers,
                                                     Sector::Professors, Sector::Researchers,
                                                     Sector::Students,   Sector::Total};
  out << "asjc";
  for (Sector s : cols) out << '\t' << to_string(s) << "_p90\t" << to_string(s) << "_average";
  out << "\tpapers\tlow_threshold\n";

  std::map<int, std::array<const ThresholdRow*, kSectorCount>> by_code;
  for (const auto& r : rows) by_code[r.asjc][index_of(r.sector)] = &r;
  for (const auto& [code, cells] : by_code) {
    out << code;
    std::size_t papers = 0;
    std::string low;
    for (Sector s : cols) {
      const ThresholdRow* r = cells[index_of(s)];
      if (!r) {
        out << "\t\t";
        continue;
      }
      papers = r->papers;
      out << '\t' << r->threshold << '\t' << std::fixed << std::setprecision(2) << r->mean;
      if (r->low_threshold) low += (low.empty() ? "" : ",") + std::string(to_string(s));
    }
    out << '\t' << papers << '\t' << low << '\n';
  }
}

}  // namespace exmap

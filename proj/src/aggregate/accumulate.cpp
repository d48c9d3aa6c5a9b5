#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "exmap/aggregate.hpp"

namespace exmap {

std::string subject_area(int asjc) { return std::to_string(asjc / 100 * 100); }

std::map<CellKey, CellTotals> accumulate(std::span<const PaperRecord> corpus,
                                         std::span<const IndicatorWeights> weights) {
  if (weights.size() != corpus.size())
    throw ConsistencyError("weights cover " + std::to_string(weights.size()) + " papers, corpus has " +
                           std::to_string(corpus.size()));
  std::map<CellKey, CellTotals> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& p = corpus[i];
    const auto& w = weights[i];
    if (w.asjc != p.asjc_codes)
      throw ConsistencyError("weights for paper " + p.paper_id + " do not match its subject codes");

    std::map<std::string, std::array<double, kIndicatorCount>> per_area;
    for (std::size_t c = 0; c < p.asjc_codes.size(); ++c) {
      auto [it, fresh] = per_area.try_emplace(subject_area(p.asjc_codes[c]));
      for (std::size_t k = 0; k < kIndicatorCount; ++k) {
        const double v = w.per_asjc[k][c];
        it->second[k] = fresh ? v : std::max(it->second[k], v);
      }
      (void)fresh;
    }
    for (const auto& inst : p.institution_ids) {
      for (const auto& [area, vals] : per_area) {
        auto& cell = out[{inst, area}];
        ++cell.n;
        for (std::size_t k = 0; k < kIndicatorCount; ++k) cell.raw_sum[k] += vals[k];
      }
      auto& all = out[{inst, kAllSubjects}];
      ++all.n;
      for (std::size_t k = 0; k < kIndicatorCount; ++k) all.raw_sum[k] += w.all_subjects[k];
    }
  }
  return out;
}

std::int64_t round_successes(double raw_sum, std::int64_t n) {
  const auto r = static_cast<std::int64_t>(std::round(raw_sum));
  return std::clamp<std::int64_t>(r, 0, n);
}

std::vector<InstitutionAggregate> build_aggregates(const std::map<CellKey, CellTotals>& totals,
                                                   const GeoTable& geo) {
  std::vector<InstitutionAggregate> out;
  out.reserve(totals.size());
  for (const auto& [key, cell] : totals) {
    InstitutionAggregate a;
    a.institution_id = key.first;
    a.subject = key.second;
    if (auto it = geo.find(key.first); it != geo.end()) a.country = it->second.country;
    a.n = cell.n;
    a.raw_sum = cell.raw_sum;
    for (std::size_t k = 0; k < kIndicatorCount; ++k) a.y[k] = round_successes(cell.raw_sum[k], cell.n);
    out.push_back(std::move(a));
  }
  return out;
}

void write_aggregates(std::ostream& out, std::span<const InstitutionAggregate> aggregates,
                      const CovariateTable& covariates) {
  out << "institution_id\tcountry\tsubject\tindicator\tn\ty\traw_sum";
  for (const auto& name : kCovariateNames) out << '\t' << name;
  out << '\n';
  out.precision(17);
  for (const auto& a : aggregates) {
    const auto cov = covariates.find(a.country);
    for (Indicator ind : kAllIndicators) {
      const auto k = index_of(ind);
      out << a.institution_id << '\t' << a.country << '\t' << a.subject << '\t' << to_string(ind) << '\t'
          << a.n << '\t' << a.y[k] << '\t' << a.raw_sum[k];
      for (const auto& name : kCovariateNames) {
        out << '\t';
        if (cov != covariates.end()) {
          if (auto v = cov->second.find(name); v != cov->second.end()) out << v->second;
        }
      }
      out << '\n';
    }
  }
}

namespace {
std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> f;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) f.push_back(cur);
  if (!line.empty() && line.back() == sep) f.emplace_back();
  return f;
}
}  // namespace

std::vector<InstitutionAggregate> read_aggregates(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  std::map<CellKey, InstitutionAggregate> cells;
  std::vector<CellKey> order;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() < 7) throw InputError("aggregate table line " + std::to_string(lineno) + ": too few fields");
    auto ind = indicator_from_string(f[3]);
    if (!ind) throw InputError("aggregate table line " + std::to_string(lineno) + ": unknown indicator");
    CellKey key{f[0], f[2]};
    auto [it, fresh] = cells.try_emplace(key);
    if (fresh) {
      order.push_back(key);
      it->second.institution_id = f[0];
      it->second.country = f[1];
      it->second.subject = f[2];
      it->second.n = std::stoll(f[4]);
    } else if (it->second.n != std::stoll(f[4])) {
      throw ConsistencyError("aggregate table line " + std::to_string(lineno) +
                             ": paper count differs between indicators");
    }
    it->second.y[index_of(*ind)] = std::stoll(f[5]);
    it->second.raw_sum[index_of(*ind)] = std::stod(f[6]);
  }
  std::vector<InstitutionAggregate> out;
  for (const auto& k : order) out.push_back(cells.at(k));
  return out;
}

void write_exclusions(std::ostream& out, std::span<const Exclusion> exclusions) {
  out << "institution_id\tsubject\treason\n";
  for (const auto& e : exclusions) out << e.institution_id << '\t' << e.subject << '\t' << e.reason << '\n';
}

}  // namespace exmap

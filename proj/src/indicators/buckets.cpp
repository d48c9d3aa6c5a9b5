#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "exmap/indicators.hpp"

namespace exmap {

std::vector<Bucket> build_buckets(std::span<const PaperRecord> corpus) {
  std::map<BucketKey, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (int code : corpus[i].asjc_codes) grouped[{corpus[i].year, code}].push_back(i);
  std::vector<Bucket> out;
  out.reserve(grouped.size());
  for (auto& [key, papers] : grouped) out.push_back({key, std::move(papers)});
  return out;
}

std::vector<double> bucket_sector_weights(std::span<const BucketMember> members, TopShare share) {
  std::vector<double> out(members.size(), 0.0);
  std::vector<std::int64_t> observed;
  std::vector<std::size_t> observed_at;
  const double cut = 100.0 * (1.0 - share.fraction());
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].is_random()) {
      out[i] = members[i].random_percentile > cut ? 1.0 : 0.0;
    } else {
      observed.push_back(members[i].value);
      observed_at.push_back(i);
    }
  }
  if (!observed.empty()) {
    auto w = fractional_top_share(observed, share);
    for (std::size_t j = 0; j < w.size(); ++j) out[observed_at[j]] = w[j];
  }
  return out;
}

namespace {

std::size_t code_slot(const PaperRecord& p, int asjc) {
  auto it = std::lower_bound(p.asjc_codes.begin(), p.asjc_codes.end(), asjc);
  return static_cast<std::size_t>(it - p.asjc_codes.begin());
}

std::vector<IndicatorWeights> empty_weights(std::span<const PaperRecord> corpus) {
  std::vector<IndicatorWeights> out(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out[i].asjc = corpus[i].asjc_codes;
    for (auto& v : out[i].per_asjc) v.assign(corpus[i].asjc_codes.size(), 0.0);
  }
  return out;
}

void finish_max(std::vector<IndicatorWeights>& weights) {
  for (auto& w : weights)
    for (std::size_t k = 0; k < kIndicatorCount; ++k)
      w.all_subjects[k] =
          w.per_asjc[k].empty() ? 0.0 : *std::max_element(w.per_asjc[k].begin(), w.per_asjc[k].end());
}

std::vector<BucketMember> sector_members(std::span<const PaperRecord> corpus, const Bucket& b,
                                         Sector sector, std::uint64_t seed) {
  std::vector<BucketMember> members;
  members.reserve(b.papers.size());
  for (std::size_t idx : b.papers) {
    const auto& p = corpus[idx];
    BucketMember m{idx, 0, -1.0};
    if (p.unretrievable)
      m.random_percentile = random_percentile(seed, p.paper_id, b.key.asjc);
    else
      m.value = p.reader_counts[index_of(sector)];
    members.push_back(m);
  }
  return members;
}

// All seven indicators for one bucket. Each (paper, asjc) slot is written by
// exactly one bucket, so buckets can run concurrently.
void process_bucket(std::span<const PaperRecord> corpus, const Bucket& b, const WeightsConfig& cfg,
                    std::vector<IndicatorWeights>& out) {
  for (Sector s : kAllSectors) {
    auto members = sector_members(corpus, b, s, cfg.seed);
    auto w = bucket_sector_weights(members, cfg.share);
    const auto k = index_of(indicator_for(s));
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto idx = members[i].paper;
      out[idx].per_asjc[k][code_slot(corpus[idx], b.key.asjc)] = w[i];
    }
  }
  std::vector<CitationValue> cites;
  cites.reserve(b.papers.size());
  for (std::size_t idx : b.papers) cites.push_back({corpus[idx].citations, corpus[idx].sjr});
  auto sel = citation_top_share(cites, cfg.share);
  const auto k = index_of(Indicator::Citations);
  for (std::size_t i = 0; i < b.papers.size(); ++i) {
    const auto idx = b.papers[i];
    out[idx].per_asjc[k][code_slot(corpus[idx], b.key.asjc)] = sel[i] ? 1.0 : 0.0;
  }
}

}  // namespace

std::vector<IndicatorWeights> compute_weights_serial(std::span<const PaperRecord> corpus,
                                                     const WeightsConfig& config) {
  auto buckets = build_buckets(corpus);
  auto out = empty_weights(corpus);
  for (const auto& b : buckets) process_bucket(corpus, b, config, out);
  finish_max(out);
  return out;
}

std::vector<IndicatorWeights> compute_weights(std::span<const PaperRecord> corpus,
                                              const WeightsConfig& config) {
  auto buckets = build_buckets(corpus);
  auto out = empty_weights(corpus);
  const auto nb = static_cast<std::ptrdiff_t>(buckets.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < nb; ++i) process_bucket(corpus, buckets[i], config, out);
  finish_max(out);
  return out;
}

std::vector<IndicatorWeights> sector_weights(std::span<const PaperRecord> corpus,
                                             std::span<const Bucket> buckets, Sector sector,
                                             const WeightsConfig& config) {
  auto out = empty_weights(corpus);
  const auto k = index_of(indicator_for(sector));
  for (const auto& b : buckets) {
    auto members = sector_members(corpus, b, sector, config.seed);
    auto w = bucket_sector_weights(members, config.share);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto idx = members[i].paper;
      out[idx].per_asjc[k][code_slot(corpus[idx], b.key.asjc)] = w[i];
    }
  }
  finish_max(out);
  return out;
}

void write_weights(std::ostream& out, std::span<const PaperRecord> corpus,
                   std::span<const IndicatorWeights> weights) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (Indicator ind : kAllIndicators) {
      const auto k = index_of(ind);
      nlohmann::json j;
      j["paper_id"] = corpus[i].paper_id;
      j["indicator"] = std::string(to_string(ind));
      j["asjc"] = weights[i].asjc;
      j["weight"] = weights[i].per_asjc[k];
      j["all_subjects"] = weights[i].all_subjects[k];
      out << j.dump() << '\n';
    }
  }
}

std::vector<IndicatorWeights> read_weights(std::istream& in, std::span<const PaperRecord> corpus) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus[i].paper_id, i);
  auto out = empty_weights(corpus);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    const auto id = j.at("paper_id").get<std::string>();
    auto it = index.find(id);
    if (it == index.end())
      throw ConsistencyError("weights line " + std::to_string(lineno) + " references unknown paper " + id);
    auto ind = indicator_from_string(j.at("indicator").get<std::string>());
    if (!ind) throw ConsistencyError("weights line " + std::to_string(lineno) + ": unknown indicator");
    auto& w = out[it->second];
    if (j.at("asjc").get<std::vector<int>>() != w.asjc)
      throw ConsistencyError("weights line " + std::to_string(lineno) + ": subject codes differ from corpus");
    w.per_asjc[index_of(*ind)] = j.at("weight").get<std::vector<double>>();
    w.all_subjects[index_of(*ind)] = j.at("all_subjects").get<double>();
  }
  return out;
}

std::vector<SelectionDeviation> citation_selection_deviations(std::span<const PaperRecord> corpus,
                                                              std::span<const Bucket> buckets,
                                                              TopShare share, double tolerance) {
  std::vector<SelectionDeviation> out;
  for (const auto& b : buckets) {
    std::vector<CitationValue> cites;
    for (std::size_t idx : b.papers) cites.push_back({corpus[idx].citations, corpus[idx].sjr});
    auto sel = citation_top_share(cites, share);
    const double selected =
        static_cast<double>(std::count(sel.begin(), sel.end(), 1)) / static_cast<double>(sel.size());
    if (std::abs(selected - share.fraction()) > tolerance) out.push_back({b.key, selected});
  }
  return out;
}

}  // namespace exmap

#include <algorithm>
#include <stdexcept>

#include "exmap/export.hpp"

namespace exmap {

Significance significance_flags(double lo, double hi, double grand_mean) {
  if (lo > grand_mean) return Significance::Above;
  if (hi < grand_mean) return Significance::Below;
  return Significance::Neither;
}

std::map<std::string, int> assign_ranks(std::span<const std::pair<std::string, double>> scores) {
  std::vector<std::pair<std::string, double>> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::map<std::string, int> ranks;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!ranks.emplace(sorted[i].first, static_cast<int>(i + 1)).second)
      throw std::invalid_argument("assign_ranks: duplicate institution " + sorted[i].first);
  }
  return ranks;
}

std::map<std::string, int> rank_delta(const std::map<std::string, int>& with_cov,
                                      const std::map<std::string, int>& without_cov) {
  if (with_cov.size() != without_cov.size())
    throw std::invalid_argument("rank_delta: rankings cover different institution sets");
  std::map<std::string, int> out;
  auto it = without_cov.begin();
  for (const auto& [id, r] : with_cov) {
    if (it->first != id) throw std::invalid_argument("rank_delta: institution " + id + " missing from one ranking");
    out.emplace(id, it->second - r);
    ++it;
  }
  return out;
}

}  // namespace exmap

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "exmap/indicators.hpp"

namespace exmap {

namespace {
constexpr std::int64_t kUnit = 1'000'000;  // one paper, in ppm
}

TopShare TopShare::from_fraction(double share) {
  if (!(share > 0.0 && share < 1.0)) throw std::invalid_argument("top share must lie in (0,1)");
  return TopShare{static_cast<std::int64_t>(std::llround(share * 1e6))};
}

std::vector<double> hazen_percentiles(std::span<const std::int64_t> values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("hazen_percentiles: empty input");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && values[order[hi]] == values[order[lo]]) ++hi;
    // Ranks lo+1 .. hi (1-based); mean of (i - 0.5) over the range.
    const double mean_rank = 0.5 * static_cast<double>(lo + 1 + hi) - 0.5;
    const double pct = mean_rank / static_cast<double>(n) * 100.0;
    for (std::size_t i = lo; i < hi; ++i) out[order[i]] = pct;
    lo = hi;
  }
  return out;
}

std::vector<double> fractional_top_share(std::span<const std::int64_t> values, TopShare share) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  // Papers in descending order occupy consecutive unit intervals; the top
  // region is [0, n * share).
  const std::int64_t top = static_cast<std::int64_t>(n) * share.ppm;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && values[order[hi]] == values[order[lo]]) ++hi;
    const std::int64_t begin = static_cast<std::int64_t>(lo) * kUnit;
    const std::int64_t end = static_cast<std::int64_t>(hi) * kUnit;
    double w;
    if (end <= top)
      w = 1.0;
    else if (begin >= top)
      w = 0.0;
    else
      w = static_cast<double>(top - begin) / static_cast<double>(end - begin);
    for (std::size_t i = lo; i < hi; ++i) out[order[i]] = w;
    if (begin >= top) break;
    lo = hi;
  }
  return out;
}

std::vector<std::uint8_t> citation_top_share(std::span<const CitationValue> values, TopShare share) {
  const std::size_t n = values.size();
  std::vector<std::uint8_t> out(n, 0);
  if (n == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto above = [&](std::size_t a, std::size_t b) {
    if (values[a].citations != values[b].citations) return values[a].citations > values[b].citations;
    return values[a].sjr > values[b].sjr;
  };
  std::stable_sort(order.begin(), order.end(), above);

  const auto cut = static_cast<std::size_t>(static_cast<std::int64_t>(n) * share.ppm / kUnit);
  if (cut == 0) return out;
  std::size_t end = cut;
  // Extend through the tie group that contains the last selected paper.
  while (end < n && !above(order[cut - 1], order[end])) ++end;
  for (std::size_t i = 0; i < end; ++i) out[order[i]] = 1;
  return out;
}

std::int64_t percentile_threshold(std::span<const std::int64_t> values, TopShare share) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("percentile_threshold: empty input");
  std::vector<std::int64_t> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Smallest 1-based i with (i - 0.5) / n >= 1 - share, in integer form:
  // 2 * kUnit * i >= 2 * n * (kUnit - ppm) + kUnit.
  const std::int64_t rhs = 2 * static_cast<std::int64_t>(n) * (kUnit - share.ppm) + kUnit;
  std::int64_t i = (rhs + 2 * kUnit - 1) / (2 * kUnit);
  i = std::clamp<std::int64_t>(i, 1, static_cast<std::int64_t>(n));
  return sorted[static_cast<std::size_t>(i - 1)];
}

}  // namespace exmap

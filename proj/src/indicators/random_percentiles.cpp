#include <string>

#include "exmap/indicators.hpp"
#include "exmap/rng.hpp"

namespace exmap {

double random_percentile(std::uint64_t seed, std::string_view paper_id, int asjc) {
  auto eng = substream(seed, paper_id, static_cast<std::uint64_t>(asjc));
  return 100.0 * uniform_open01(eng);
}

std::vector<double> random_percentiles(std::uint64_t seed, const PaperRecord& paper) {
  std::vector<double> out;
  out.reserve(paper.asjc_codes.size());
  for (int code : paper.asjc_codes) out.push_back(random_percentile(seed, paper.paper_id, code));
  return out;
}

}  // namespace exmap

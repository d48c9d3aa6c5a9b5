// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <cmath>

#include "exmap/glmm/likelihood.hpp"
#include "exmap/indicators.hpp"
#include "exmap/rng.hpp"

namespace {

using namespace exmap;

glmm::StackedDesign make_design(std::size_t clusters) {
  auto eng = substream(3, "bench-design", 0);
  glmm::StackedDesign d;
  d.K = kIndicatorCount;
  for (Indicator i : kAllIndicators) d.indicator_names.emplace_back(to_string(i));
  for (std::size_t j = 0; j < clusters; ++j) {
    glmm::Cluster c;
    c.id = std::to_string(j);
    const auto n = static_cast<std::int64_t>(200 + 1800 * uniform_open01(eng));
    for (int k = 0; k < 7; ++k) {
      const double p = 1.0 / (1.0 + std::exp(2.2 - 0.5 * standard_normal(eng)));
      c.rows.push_back({k, static_cast<std::int64_t>(std::round(p * static_cast<double>(n))), n});
    }
    d.clusters.push_back(std::move(c));
  }
  return d;
}

glmm::ModelParams params() {
  return {{-1.9, -2.6, -2.0, -2.1, -2.0, -2.1, -2.2}, {0.17, 0.41, 0.25, 0.30, 0.29, 0.25, 0.2}, 0.72};
}

std::vector<PaperRecord> make_corpus(std::size_t n) {
  auto eng = substream(5, "bench-corpus", 0);
  std::vector<PaperRecord> corpus(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = corpus[i];
    r.paper_id = "P" + std::to_string(i);
    r.year = 2012 + static_cast<int>(5 * uniform_open01(eng));
    r.asjc_codes = {1300 + static_cast<int>(40 * uniform_open01(eng))};
    r.institution_ids = {"I1"};
    r.citations = static_cast<std::int64_t>(std::exp(2 * uniform_open01(eng) + standard_normal(eng)));
    r.sjr = uniform_open01(eng);
    for (auto& v : r.reader_counts) v = static_cast<std::int64_t>(std::exp(1.5 * standard_normal(eng)));
    r.unretrievable = uniform_open01(eng) < 0.1;
  }
  return corpus;
}

void BM_LikelihoodSerial(benchmark::State& st) {
  const auto d = make_design(static_cast<std::size_t>(st.range(0)));
  const auto p = params();
  for (auto _ : st) benchmark::DoNotOptimize(glmm::marginal_log_likelihood_serial(p, d));
}

void BM_LikelihoodParallel(benchmark::State& st) {
  const auto d = make_design(static_cast<std::size_t>(st.range(0)));
  const auto p = params();
  for (auto _ : st) benchmark::DoNotOptimize(glmm::marginal_log_likelihood(p, d));
}

void BM_GradientParallel(benchmark::State& st) {
  const auto d = make_design(static_cast<std::size_t>(st.range(0)));
  const auto p = params();
  for (auto _ : st) benchmark::DoNotOptimize(glmm::marginal_log_likelihood_gradient(p, d));
}

void BM_WeightsSerial(benchmark::State& st) {
  const auto c = make_corpus(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(compute_weights_serial(c, {1, {}}));
}

void BM_WeightsParallel(benchmark::State& st) {
  const auto c = make_corpus(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(compute_weights(c, {1, {}}));
}

}  // namespace

BENCHMARK(BM_LikelihoodSerial)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LikelihoodParallel)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientParallel)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightsSerial)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightsParallel)->Arg(50000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <doctest.h>

#include "exmap/glmm/design.hpp"
#include "oracles.hpp"

using namespace exmap;
using namespace exmap::glmm;

namespace {

InstitutionAggregate agg(std::string id, std::int64_t n, std::int64_t y0) {
  InstitutionAggregate a;
  a.institution_id = std::move(id);
  a.subject = "1600";
  a.n = n;
  for (std::size_t k = 0; k < kIndicatorCount; ++k) a.y[k] = y0 + static_cast<std::int64_t>(k);
  return a;
}

}  // namespace

TEST_CASE("stacked design from aggregates") {
  std::vector<InstitutionAggregate> in = {agg("B", 50, 3), agg("A", 40, 1), agg("C", 0, 0)};
  const std::vector<Indicator> ind = {Indicator::Students, Indicator::Citations};
  std::vector<Diagnostic> diag;
  const auto d = build_design(in, ind, nullptr, &diag);
  CHECK(d.K == 2);
  CHECK(d.layout == FixedLayout::Main);
  REQUIRE(d.clusters.size() == 2);
  CHECK(d.clusters[0].id == "A");
  CHECK(d.clusters[0].rows[0].y == 1 + 4);
  CHECK(d.clusters[0].rows[1].y == 1 + 6);
  CHECK(d.clusters[1].rows[1].n == 50);
  CHECK(diag.size() == 2);
  CHECK(d.num_rows() == 4);
  CHECK(d.fixed_names() == std::vector<std::string>{"Students", "Citations"});

  std::map<std::string, double> cov = {{"A", -1.0}, {"B", 1.0}};
  const auto di = build_design(in, ind, &cov);
  CHECK(di.layout == FixedLayout::Interaction);
  CHECK(di.num_fixed() == 4);
  CHECK(di.fixed_names()[3] == "x*Citations");
  cov.erase("B");
  CHECK_THROWS_AS(build_design(in, ind, &cov), std::invalid_argument);
}

TEST_CASE("fixed rows agree with the layout definitions") {
  oracle::SimSpec spec{{-2, -1, 0, 1}, {0.2, 0.2, 0.2, 0.2}, 0.5, 5, 10, 20, 4, true};
  auto base = oracle::simulate(spec);
  for (std::size_t j = 0; j < base.clusters.size(); ++j) base.clusters[j].x = 0.3 * static_cast<double>(j) - 0.6;
  for (auto layout : {FixedLayout::Main, FixedLayout::Interaction, FixedLayout::Intercept}) {
    const auto d = with_layout(base, layout);
    std::vector<double> beta(d.num_fixed());
    for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = 0.1 * static_cast<double>(i + 1) * (i % 2 ? -1 : 1);
    std::vector<double> row(d.num_fixed());
    for (const auto& c : d.clusters)
      for (int k = 0; k < 4; ++k) {
        d.fixed_row(c, k, row);
        double eta = 0;
        for (std::size_t i = 0; i < row.size(); ++i) eta += row[i] * beta[i];
        CHECK(eta == doctest::Approx(oracle::fixed_part(d, c, k, beta)).epsilon(1e-14));
      }
    CHECK(d.fixed_names().size() == d.num_fixed());
  }
  // Effect coding: the indicator contrasts average to zero.
  const auto d = with_layout(base, FixedLayout::Intercept);
  std::vector<double> sum(d.num_fixed(), 0.0), row(d.num_fixed());
  for (int k = 0; k < 4; ++k) {
    d.fixed_row(d.clusters[0], k, row);
    for (std::size_t i = 0; i < row.size(); ++i) sum[i] += row[i];
  }
  CHECK(sum[0] == 4.0);
  for (std::size_t i = 1; i < sum.size(); ++i) CHECK(sum[i] == 0.0);
}

TEST_CASE("indicator subsets and hashes") {
  oracle::SimSpec spec{{-2, -1, 0}, {0.2, 0.2, 0.2}, 0.5, 6, 10, 20, 5, true};
  const auto d = oracle::simulate(spec);
  const std::vector<int> keep = {2, 0};
  const auto s = select_indicators(d, keep);
  CHECK(s.K == 2);
  CHECK(s.indicator_names == std::vector<std::string>{"k2", "k0"});
  CHECK(s.clusters[1].rows[0].y == d.clusters[1].rows[2].y);
  CHECK(s.clusters[1].rows[1].y == d.clusters[1].rows[0].y);

  CHECK(design_hash(d) == design_hash(oracle::simulate(spec)));
  auto changed = d;
  changed.clusters[3].rows[1].y += 1;
  CHECK(design_hash(changed) != design_hash(d));
  CHECK(design_hash(with_layout(d, FixedLayout::Intercept)) != design_hash(d));
}

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "exmap/aggregate.hpp"

using namespace exmap;

namespace {

PaperRecord paper(std::string id, std::vector<int> codes, std::vector<std::string> insts) {
  PaperRecord p;
  p.paper_id = std::move(id);
  p.year = 2014;
  p.asjc_codes = std::move(codes);
  p.institution_ids = std::move(insts);
  return p;
}

IndicatorWeights weights_for(const PaperRecord& p, std::vector<double> w) {
  IndicatorWeights iw;
  iw.asjc = p.asjc_codes;
  for (std::size_t k = 0; k < kIndicatorCount; ++k) {
    iw.per_asjc[k] = w;
    iw.all_subjects[k] = *std::max_element(w.begin(), w.end());
  }
  return iw;
}

InstitutionAggregate agg(std::string inst, std::string subject, std::int64_t n) {
  InstitutionAggregate a;
  a.institution_id = std::move(inst);
  a.subject = std::move(subject);
  a.country = "XX";
  a.n = n;
  return a;
}

}  // namespace

TEST_CASE("subject areas") {
  CHECK(subject_area(1605) == "1600");
  CHECK(subject_area(2700) == "2700");
  CHECK(subject_area(1000) == "1000");
}

TEST_CASE("whole counting with area maximum") {
  std::vector<PaperRecord> corpus = {paper("a", {1603, 1605}, {"I1", "I2"}), paper("b", {1603, 2200}, {"I1"})};
  std::vector<IndicatorWeights> w = {weights_for(corpus[0], {0.25, 0.75}), weights_for(corpus[1], {1.0, 0.0})};
  const auto totals = accumulate(corpus, w);

  const auto& c1 = totals.at({"I1", "1600"});
  CHECK(c1.n == 2);
  CHECK(c1.raw_sum[0] == doctest::Approx(1.75));
  CHECK(totals.at({"I2", "1600"}).n == 1);
  CHECK(totals.at({"I2", "1600"}).raw_sum[3] == doctest::Approx(0.75));
  CHECK(totals.at({"I1", "2200"}).raw_sum[6] == 0.0);
  CHECK(totals.at({"I1", kAllSubjects}).n == 2);
  CHECK(totals.at({"I1", kAllSubjects}).raw_sum[2] == doctest::Approx(1.75));
  CHECK(totals.count({"I2", "2200"}) == 0);

  std::vector<IndicatorWeights> short_w = {w[0]};
  CHECK_THROWS_AS(accumulate(corpus, short_w), ConsistencyError);
  auto bad = w;
  bad[1].asjc = {1603};
  CHECK_THROWS_AS(accumulate(corpus, bad), ConsistencyError);
}

TEST_CASE("rounding successes") {
  CHECK(round_successes(2.5, 10) == 3);
  CHECK(round_successes(2.4999, 10) == 2);
  CHECK(round_successes(0.5, 10) == 1);
  CHECK(round_successes(12.0, 10) == 10);
  CHECK(round_successes(-0.2, 10) == 0);
  CHECK(round_successes(0.0, 0) == 0);
}

TEST_CASE("aggregates carry the geo country and round per indicator") {
  std::map<CellKey, CellTotals> totals;
  CellTotals t;
  t.n = 40;
  t.raw_sum.fill(3.5);
  t.raw_sum[6] = 4.0;
  totals[{"I1", "1600"}] = t;
  GeoTable geo;
  geo["I1"] = {"I1", "One", "DE", 50.0, 8.0};
  const auto out = build_aggregates(totals, geo);
  REQUIRE(out.size() == 1);
  CHECK(out[0].country == "DE");
  CHECK(out[0].y[0] == 4);
  CHECK(out[0].y[6] == 4);
  CHECK(out[0].n == 40);
}

TEST_CASE("selection: paper minimum, institution minimum and the all-subjects rule") {
  const SelectionCriteria crit{100, 3, 2};
  std::vector<InstitutionAggregate> in;
  for (int i = 0; i < 4; ++i) in.push_back(agg("I" + std::to_string(i), "1600", 150));
  in.push_back(agg("I9", "1600", 99));
  for (int i = 0; i < 3; ++i) in.push_back(agg("I" + std::to_string(i), "2200", 100));
  for (int i = 0; i < 2; ++i) in.push_back(agg("I" + std::to_string(i), "2700", 500));  // too few institutions
  for (int i = 0; i < 4; ++i) in.push_back(agg("I" + std::to_string(i), kAllSubjects, 1000));
  in.push_back(agg("I9", kAllSubjects, 1000));

  const auto r = select_institutions(in, crit);
  std::map<std::string, int> kept_per_subject;
  for (const auto& a : r.kept) ++kept_per_subject[a.subject];
  CHECK(kept_per_subject["1600"] == 4);
  CHECK(kept_per_subject["2200"] == 3);
  CHECK(kept_per_subject.count("2700") == 0);
  // I0..I2 qualify in two retained subjects, I3 in one, I9 in none.
  CHECK(kept_per_subject[kAllSubjects] == 3);

  const auto has_exclusion = [&](const std::string& inst, const std::string& subject) {
    return std::any_of(r.exclusions.begin(), r.exclusions.end(),
                       [&](const Exclusion& e) { return e.institution_id == inst && e.subject == subject; });
  };
  CHECK(has_exclusion("I9", "1600"));
  CHECK(has_exclusion("", "2700"));
  CHECK(has_exclusion("I3", kAllSubjects));

  // Idempotent and order independent.
  CHECK(select_institutions(r.kept, crit).kept == r.kept);
  auto shuffled = in;
  std::mt19937 g(1);
  std::shuffle(shuffled.begin(), shuffled.end(), g);
  CHECK(select_institutions(shuffled, crit).kept == r.kept);
}

TEST_CASE("selection drops the all-subjects model when too few institutions remain") {
  std::vector<InstitutionAggregate> in;
  for (int i = 0; i < 3; ++i) in.push_back(agg("I" + std::to_string(i), "1600", 200));
  in.push_back(agg("I0", kAllSubjects, 200));
  const auto r = select_institutions(in, {100, 3, 1});
  for (const auto& a : r.kept) CHECK(a.subject != kAllSubjects);
}

TEST_CASE("covariate standardization") {
  std::vector<double> v = {1, 2, 3, 4};
  const auto z = standardize_covariate(v);
  double sum = 0, sq = 0;
  for (double x : z) sum += x;
  for (double x : z) sq += x * x;
  CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sq / 3 == doctest::Approx(1.0));
  CHECK(z[3] == doctest::Approx(1.5 / std::sqrt(5.0 / 3.0)));
  CHECK_THROWS_AS(standardize_covariate(std::vector<double>{2, 2, 2}), std::invalid_argument);

  // Each institution counts once, whatever the number of subjects it sits in.
  std::vector<InstitutionAggregate> aggs = {agg("A", "1600", 1), agg("A", "2200", 1), agg("A", kAllSubjects, 1),
                                            agg("B", "1600", 1), agg("C", "1600", 1)};
  aggs[0].country = aggs[1].country = aggs[2].country = "DE";
  aggs[3].country = "FR";
  aggs[4].country = "ZZ";
  CovariateTable table;
  table["DE"]["GNI"] = 10;
  table["FR"]["GNI"] = 20;
  const auto s = standardized_covariate(aggs, table, "GNI");
  CHECK(s.size() == 2);
  CHECK(s.at("A") == doctest::Approx(-std::sqrt(0.5)));
  CHECK(s.at("B") == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("aggregate table round trip and input files") {
  auto a = agg("I1", "1600", 30);
  a.raw_sum.fill(2.25);
  a.y.fill(2);
  CovariateTable cov;
  cov["XX"]["GNI"] = 5;
  std::stringstream io;
  std::vector<InstitutionAggregate> v = {a};
  write_aggregates(io, v, cov);
  const auto back = read_aggregates(io);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == a);

  const auto dir = std::filesystem::temp_directory_path() / "exmap_test_aggregate";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "cov.csv") << "country,NOI,NOR,GNI,MEG,CPI\nDE,1,2,3,4,5\nFR,,2,3.5,4,5\n";
    std::ofstream(dir / "geo.tsv") << "institution_id\tname\tcountry\tlat\tlon\nI1\tOne\tDE\t50.1\t8.6\nI2\tTwo\tFR\t\t\n";
  }
  const auto ct = read_covariates(dir / "cov.csv");
  CHECK(ct.at("DE").at("CPI") == 5);
  CHECK(ct.at("FR").at("GNI") == 3.5);
  CHECK(ct.at("FR").count("NOI") == 0);
  const auto geo = read_geo(dir / "geo.tsv");
  CHECK(geo.at("I1").lat == doctest::Approx(50.1));
  CHECK_FALSE(geo.at("I2").lon.has_value());
  CHECK_THROWS_AS(read_geo(dir / "missing.tsv"), InputError);
  std::filesystem::remove_all(dir);
}

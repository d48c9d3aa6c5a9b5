#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "exmap/indicators.hpp"
#include "oracles.hpp"

using namespace exmap;

namespace {

std::vector<std::int64_t> random_values(std::mt19937_64& g, std::size_t n, std::int64_t range) {
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = static_cast<std::int64_t>(g() % static_cast<std::uint64_t>(range));
  return v;
}

PaperRecord make_paper(std::string id, int year, std::vector<int> codes, std::int64_t readers,
                       std::int64_t citations = 0, double sjr = 0.0) {
  PaperRecord p;
  p.paper_id = std::move(id);
  p.year = year;
  p.asjc_codes = std::move(codes);
  p.institution_ids = {"I"};
  p.citations = citations;
  p.sjr = sjr;
  p.reader_counts.fill(readers);
  return p;
}

}  // namespace

TEST_CASE("hazen percentiles") {
  CHECK(hazen_percentiles(std::vector<std::int64_t>{7}) == std::vector<double>{50.0});
  auto a = hazen_percentiles(std::vector<std::int64_t>{1, 2, 3});
  CHECK(a[0] == doctest::Approx(16.6667).epsilon(1e-4));
  CHECK(a[1] == 50.0);
  CHECK(a[2] == doctest::Approx(83.3333).epsilon(1e-4));
  auto t = hazen_percentiles(std::vector<std::int64_t>{4, 4, 9});
  CHECK(t[0] == doctest::Approx(100.0 / 3));
  CHECK(t[1] == t[0]);
  CHECK(t[2] == doctest::Approx(250.0 / 3));
  CHECK_THROWS_AS(hazen_percentiles(std::vector<std::int64_t>{}), std::invalid_argument);
}

TEST_CASE("hazen matches the counting oracle and is permutation equivariant") {
  std::mt19937_64 g(3);
  for (int rep = 0; rep < 200; ++rep) {
    auto v = random_values(g, 1 + g() % 60, 1 + static_cast<std::int64_t>(g() % 12));
    const auto got = hazen_percentiles(v);
    CHECK(got == oracle::hazen(v));
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    std::vector<std::int64_t> pv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) pv[i] = v[perm[i]];
    const auto pgot = hazen_percentiles(pv);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(pgot[i] == got[perm[i]]);
  }
}

TEST_CASE("fractional top share") {
  auto distinct = fractional_top_share(std::vector<std::int64_t>{9, 8, 7, 6, 5, 4, 3, 2, 1, 0});
  CHECK(distinct[0] == 1.0);
  CHECK(std::accumulate(distinct.begin() + 1, distinct.end(), 0.0) == 0.0);

  auto tied = fractional_top_share(std::vector<std::int64_t>{5, 5, 5, 2, 2, 1, 1, 1, 0, 0});
  for (int i = 0; i < 3; ++i) CHECK(tied[i] == doctest::Approx(1.0 / 3));
  for (int i = 3; i < 10; ++i) CHECK(tied[i] == 0.0);

  auto flat = fractional_top_share(std::vector<std::int64_t>(10, 4));
  for (double w : flat) CHECK(w == doctest::Approx(0.1));
}

TEST_CASE("fractional top share matches the brute-force oracle") {
  std::mt19937_64 g(5);
  for (int rep = 0; rep < 300; ++rep) {
    auto v = random_values(g, 1 + g() % 150, 1 + static_cast<std::int64_t>(g() % 8));
    const auto w = fractional_top_share(v);
    CHECK(w == oracle::waltman_schreiber(v, 100'000));
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(0.1 * static_cast<double>(v.size())).epsilon(1e-12));
    // Any strictly increasing transform leaves the weights alone.
    std::vector<std::int64_t> t(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i] * v[i] + 3 * v[i] + 11;
    CHECK(fractional_top_share(t) == w);
  }
}

TEST_CASE("citation top share resolves ties by sjr and keeps boundary ties") {
  std::vector<CitationValue> distinct;
  for (int i = 0; i < 10; ++i) distinct.push_back({i, 1.0});
  auto d = citation_top_share(distinct);
  CHECK(std::count(d.begin(), d.end(), 1) == 1);
  CHECK(d[9] == 1);

  std::vector<CitationValue> top_tie = {{50, 0.5}, {50, 2.0}, {3, 1}, {2, 1}, {2, 1}, {1, 1}, {1, 1}, {0, 1}, {0, 1}, {0, 1}};
  auto t = citation_top_share(top_tie);
  CHECK(t[1] == 1);
  CHECK(std::count(t.begin(), t.end(), 1) == 1);

  std::vector<CitationValue> boundary = {{9, 1}, {9, 1}, {9, 1}, {4, 1}, {3, 1}, {2, 1}, {1, 1}, {1, 1}, {0, 1}, {0, 1}};
  auto b = citation_top_share(boundary);
  CHECK(std::count(b.begin(), b.end(), 1) == 3);
}

TEST_CASE("random percentiles are reproducible and uniform") {
  PaperRecord p = make_paper("x1", 2014, {1303, 1605, 2204}, 0);
  const auto a = random_percentiles(42, p);
  CHECK(a == random_percentiles(42, p));
  REQUIRE(a.size() == 3);
  CHECK(a[0] != a[1]);
  CHECK(a[1] != a[2]);
  CHECK(random_percentiles(43, p) != a);

  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double r = random_percentile(9, "paper" + std::to_string(i), 1600);
    CHECK_UNARY(r > 0.0 && r < 100.0);
    sum += r;
  }
  CHECK(sum / 1e5 == doctest::Approx(50.0).epsilon(0.02));
}

TEST_CASE("bucket weights: observed and random members") {
  std::vector<BucketMember> observed;
  for (std::int64_t v = 0; v < 10; ++v) observed.push_back({static_cast<std::size_t>(v), v, -1});
  std::vector<std::int64_t> values(10);
  std::iota(values.begin(), values.end(), 0);
  CHECK(bucket_sector_weights(observed) == fractional_top_share(values));

  // Only random-percentile papers: about 10% of the mass on average.
  double total = 0.0, papers = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::vector<BucketMember> m;
    for (int i = 0; i < 20; ++i) m.push_back({0, 0, random_percentile(seed, "p" + std::to_string(i), 1600)});
    const auto w = bucket_sector_weights(m);
    total += std::accumulate(w.begin(), w.end(), 0.0);
    papers += 20;
  }
  CHECK(total / papers == doctest::Approx(0.1).epsilon(0.1));

  std::vector<BucketMember> edge = {{0, 0, 90.0}, {1, 0, 90.5}};
  const auto we = bucket_sector_weights(edge);
  CHECK(we[0] == 0.0);
  CHECK(we[1] == 1.0);
}

TEST_CASE("weights per subject code and the all-subjects maximum") {
  std::vector<PaperRecord> corpus;
  // Bucket (2014, 1600): ten papers, reader counts 0..9. Bucket (2014, 1606):
  // three papers tied at 5 plus seven zeros.
  for (int i = 0; i < 10; ++i) corpus.push_back(make_paper("a" + std::to_string(i), 2014, {1600}, i));
  corpus.push_back(make_paper("both", 2014, {1600, 1606}, 5));
  for (int i = 0; i < 2; ++i) corpus.push_back(make_paper("t" + std::to_string(i), 2014, {1606}, 5));
  for (int i = 0; i < 7; ++i) corpus.push_back(make_paper("z" + std::to_string(i), 2014, {1606}, 0));

  const auto w = compute_weights(corpus, {1, {}});
  const auto& both = w[10];
  const auto k = index_of(Indicator::Researchers);
  REQUIRE(both.asjc == std::vector<int>{1600, 1606});
  // 1600 holds 11 papers, so 1.1 top papers: 9 and part of 8. The tie at 5
  // in 1606 shares one slot three ways.
  CHECK(both.per_asjc[k][0] == 0.0);
  CHECK(both.per_asjc[k][1] == doctest::Approx(1.0 / 3));
  CHECK(both.all_subjects[k] == both.per_asjc[k][1]);
  for (const auto& pw : w)
    for (std::size_t i = 0; i < kIndicatorCount; ++i)
      CHECK(pw.all_subjects[i] == *std::max_element(pw.per_asjc[i].begin(), pw.per_asjc[i].end()));

  CHECK(compute_weights_serial(corpus, {1, {}})[10].per_asjc == both.per_asjc);
}

TEST_CASE("parallel weights equal the serial reference") {
  std::mt19937_64 g(17);
  std::vector<PaperRecord> corpus;
  for (int i = 0; i < 4000; ++i) {
    auto p = make_paper("p" + std::to_string(i), 2012 + static_cast<int>(g() % 3), {1300 + static_cast<int>(g() % 6)},
                        0, static_cast<std::int64_t>(g() % 30), static_cast<double>(g() % 4));
    if (g() % 4 == 0) p.asjc_codes.push_back(1400 + static_cast<int>(g() % 3));
    for (auto& r : p.reader_counts) r = static_cast<std::int64_t>(g() % 15);
    p.unretrievable = g() % 10 == 0;
    corpus.push_back(std::move(p));
  }
  const WeightsConfig cfg{99, {}};
  const auto a = compute_weights_serial(corpus, cfg);
  const auto b = compute_weights(corpus, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].per_asjc == b[i].per_asjc);
    CHECK(a[i].all_subjects == b[i].all_subjects);
  }

  std::stringstream io;
  write_weights(io, corpus, b);
  const auto back = read_weights(io, corpus);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(back[i].per_asjc == b[i].per_asjc);

  std::stringstream bad;
  bad << R"({"paper_id":"ghost","indicator":"Students","asjc":[1300],"weight":[1],"all_subjects":1})" << '\n';
  CHECK_THROWS_AS(read_weights(bad, corpus), ConsistencyError);
}

TEST_CASE("percentile thresholds") {
  CHECK(percentile_threshold(std::vector<std::int64_t>(50, 0)) == 0);
  std::vector<std::int64_t> ten(10);
  std::iota(ten.begin(), ten.end(), 1);
  CHECK(percentile_threshold(ten) == 10);
  CHECK_THROWS(percentile_threshold(std::vector<std::int64_t>{}));

  // Smallest value whose positional percentile (i - 0.5) / n reaches 0.9.
  std::mt19937_64 g(23);
  for (int rep = 0; rep < 200; ++rep) {
    auto v = random_values(g, 1 + g() % 80, 1 + static_cast<std::int64_t>(g() % 20));
    auto s = v;
    std::sort(s.begin(), s.end());
    std::int64_t expected = s.back();
    for (std::size_t i = 1; i <= s.size(); ++i)
      if ((static_cast<double>(i) - 0.5) / static_cast<double>(s.size()) >= 0.9 - 1e-12) {
        expected = s[i - 1];
        break;
      }
    CHECK(percentile_threshold(v) == expected);
  }
}

TEST_CASE("threshold report shape and low-threshold flag") {
  std::vector<PaperRecord> corpus;
  for (int i = 0; i < 100; ++i) {
    auto p = make_paper("p" + std::to_string(i), 2012, {1600}, 0);
    p.reader_counts[index_of(Sector::Librarians)] = i < 95 ? 0 : 1;
    p.reader_counts[index_of(Sector::Total)] = i;
    corpus.push_back(p);
  }
  corpus.push_back(make_paper("gone", 2012, {1600}, 500));
  corpus.back().unretrievable = true;
  const auto buckets = build_buckets(corpus);
  const auto rows = threshold_report(corpus, buckets);
  REQUIRE(rows.size() == kSectorCount);
  for (const auto& r : rows) {
    CHECK(r.papers == 100);
    if (r.sector == Sector::Librarians) {
      CHECK(r.threshold == 0);
      CHECK(r.mean == doctest::Approx(0.05));
      CHECK(r.low_threshold);
    }
    if (r.sector == Sector::Total) {
      CHECK(r.threshold == 90);
      CHECK(r.mean == doctest::Approx(49.5));
      CHECK_FALSE(r.low_threshold);
    }
  }
  std::ostringstream out;
  write_threshold_report(out, rows);
  const std::string text = out.str();
  CHECK(text.rfind("asjc\tLibrarians_p90\tLibrarians_average\tLecturers_p90", 0) == 0);
  CHECK(text.find("\n1600\t0\t0.05\t") != std::string::npos);
}

TEST_CASE("citation selection deviations flag unresolved ties") {
  std::vector<PaperRecord> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(make_paper("c" + std::to_string(i), 2015, {2700}, 0, i < 3 ? 20 : i, 1.0));
  for (int i = 0; i < 10; ++i) corpus.push_back(make_paper("d" + std::to_string(i), 2015, {2701}, 0, i, 1.0));
  const auto dev = citation_selection_deviations(corpus, build_buckets(corpus));
  REQUIRE(dev.size() == 1);
  CHECK(dev[0].key.asjc == 2700);
  CHECK(dev[0].selected_share == doctest::Approx(0.3));
}

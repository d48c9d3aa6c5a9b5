#include <doctest.h>

#include <random>
#include <sstream>

#include "exmap/ingest.hpp"

using namespace exmap;

namespace {

PaperRecord paper(std::string id, std::optional<std::string> doi) {
  PaperRecord r;
  r.paper_id = std::move(id);
  r.doi = std::move(doi);
  r.year = 2014;
  r.asjc_codes = {1600};
  r.institution_ids = {"I1"};
  return r;
}

}  // namespace

TEST_CASE("empty stream parses to nothing") {
  std::istringstream in("");
  auto r = parse_paper_records(in);
  CHECK(r.records.empty());
  CHECK(r.diagnostics.empty());
}

TEST_CASE("one valid line populates every field") {
  std::istringstream in(
      R"({"paper_id":"p1","doi":" HTTPS://doi.org/10.1000/ABC ","year":2013,"asjc":[1606,1600,1606],)"
      R"("institutions":["b","a"],"citations":12,"sjr":1.25,"readers":{"Librarian":2,"Other":3}})");
  auto r = parse_paper_records(in);
  REQUIRE(r.records.size() == 1);
  const auto& p = r.records[0];
  CHECK(p.paper_id == "p1");
  CHECK(p.doi == "10.1000/abc");
  CHECK(p.year == 2013);
  CHECK(p.asjc_codes == std::vector<int>{1600, 1606});
  CHECK(p.institution_ids == std::vector<std::string>{"a", "b"});
  CHECK(p.citations == 12);
  CHECK(p.sjr == 1.25);
  CHECK(p.reader_counts[index_of(Sector::Librarians)] == 2);
  CHECK(p.reader_counts[index_of(Sector::Total)] == 5);
  CHECK_FALSE(p.unretrievable);

  std::istringstream again(to_json_line(p));
  auto back = parse_paper_records(again);
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0] == p);
}

TEST_CASE("malformed lines become diagnostics with line numbers") {
  std::istringstream in(
      "{\"paper_id\":\"ok\",\"year\":2012,\"asjc\":[1600],\"institutions\":[\"i\"],\"citations\":1}\n"
      "\n"
      "{\"paper_id\":\"neg\",\"year\":2012,\"asjc\":[1600],\"institutions\":[\"i\"],\"citations\":-1}\n"
      "not json\n"
      "{\"paper_id\":\"old\",\"year\":2001,\"asjc\":[1600],\"institutions\":[\"i\"],\"citations\":1}\n");
  auto r = parse_paper_records(in, YearWindow{2012, 2016});
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].paper_id == "ok");
  REQUIRE(r.diagnostics.size() == 3);
  CHECK(r.diagnostics[0].line == 3);
  CHECK(r.diagnostics[1].line == 4);
  CHECK(r.diagnostics[2].line == 5);
}

TEST_CASE("missing corpus file is an input error") {
  CHECK_THROWS_AS(parse_paper_file("/nonexistent/corpus.jsonl"), InputError);
}

TEST_CASE("doi normalization") {
  CHECK(normalize_doi("10.1/X") == "10.1/x");
  CHECK(normalize_doi("  https://doi.org/10.1/x\t") == "10.1/x");
  CHECK(normalize_doi("doi:10.1/X") == "10.1/x");
  CHECK_FALSE(normalize_doi("   ").has_value());
}

TEST_CASE("dedupe strips every record of a duplicated doi") {
  SUBCASE("distinct dois pass through") {
    std::vector<PaperRecord> in = {paper("a", "10.1/a"), paper("b", "10.1/b"), paper("c", std::nullopt)};
    auto r = dedupe_dois(in);
    CHECK(r.records == in);
    CHECK(r.duplicates.empty());
    CHECK(r.fetch_set == std::vector<std::string>{"10.1/a", "10.1/b"});
  }
  SUBCASE("two records share a doi") {
    auto r = dedupe_dois({paper("b", "10.1/x"), paper("a", "10.1/x")});
    REQUIRE(r.duplicates.size() == 1);
    CHECK(r.duplicates[0].doi == "10.1/x");
    CHECK(r.duplicates[0].paper_ids == std::vector<std::string>{"a", "b"});
    CHECK(r.records.size() == 2);
    CHECK_FALSE(r.records[0].doi);
    CHECK_FALSE(r.records[1].doi);
    CHECK(r.fetch_set.empty());
    std::ostringstream report;
    write_duplicate_report(report, r.duplicates);
    CHECK(report.str() == "doi\tpaper_ids\tcount\n10.1/x\ta,b\t2\n");
  }
}

TEST_CASE("dedupe is idempotent and fetch set arithmetic holds") {
  std::mt19937_64 g(7);
  std::vector<PaperRecord> in;
  for (int i = 0; i < 3000; ++i) {
    std::optional<std::string> doi;
    if (g() % 10 != 0) doi = "10.9/" + std::to_string(g() % 2600);
    in.push_back(paper("p" + std::to_string(i), doi));
  }
  auto once = dedupe_dois(in);
  // Each DOI either goes to the fetch set or all of its papers count as duplicated.
  CHECK(once.papers_with_doi - once.duplicated_papers == once.fetch_set.size());
  auto twice = dedupe_dois(once.records);
  CHECK(twice.records == once.records);
  CHECK(twice.duplicates.empty());
  CHECK(twice.fetch_set == once.fetch_set);

  // Same accounting at the scale of the full production corpus.
  const std::size_t with_doi = 8'928'486, duplicated = 15'009;
  CHECK(with_doi - duplicated == 8'913'477);
}

TEST_CASE("status strings map onto sectors") {
  CHECK(map_status_to_sector("Student > Ph. D. Student") == Sector::Students);
  CHECK(map_status_to_sector("Lecturer > Senior Lecturer") == Sector::Lecturers);
  CHECK(map_status_to_sector("Professor > Associate Professor") == Sector::Professors);
  CHECK(map_status_to_sector("Librarian") == Sector::Librarians);
  CHECK(map_status_to_sector("Researcher") == Sector::Researchers);

  std::vector<Diagnostic> diag;
  CHECK_FALSE(map_status_to_sector("Unspecified", &diag));
  CHECK_FALSE(map_status_to_sector("Other", &diag));
  CHECK(diag.empty());
  CHECK_FALSE(map_status_to_sector("", &diag));
  CHECK(diag.size() == 1);

  CHECK(documented_statuses().size() == 13);
  diag.clear();
  for (const auto& s : documented_statuses()) (void)map_status_to_sector(s, &diag);
  CHECK(diag.empty());
}

TEST_CASE("total absorbs unmapped statuses") {
  auto c = sector_counts_from_raw({{"Librarian", 2}, {"Other", 3}});
  CHECK(c[index_of(Sector::Librarians)] == 2);
  CHECK(c[index_of(Sector::Total)] == 5);

  std::mt19937_64 g(11);
  const auto& statuses = documented_statuses();
  for (int rep = 0; rep < 200; ++rep) {
    std::map<std::string, std::int64_t> raw;
    for (const auto& s : statuses)
      if (g() % 3 == 0) raw[s] = static_cast<std::int64_t>(g() % 20);
    const auto counts = sector_counts_from_raw(raw);
    std::int64_t named = 0;
    for (Sector s : kAllSectors)
      if (s != Sector::Total) named += counts[index_of(s)];
    const bool unmapped = raw["Other"] + raw["Unspecified"] > 0;
    CHECK(counts[index_of(Sector::Total)] >= named);
    CHECK((counts[index_of(Sector::Total)] == named) == !unmapped);
  }
}

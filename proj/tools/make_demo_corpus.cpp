// Writes a synthetic corpus with fetch fixture, covariates, geo table and a
// run config into one directory. Output depends only on --seed and --papers.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "exmap/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Area {
  int base;
  std::vector<int> codes;
  double share;
};

const std::vector<Area> kAreas = {
    {1300, {1303, 1312}, 0.30},
    {1600, {1605, 1606}, 0.25},
    {2200, {2204, 2208}, 0.25},
    {2700, {2701, 2705}, 0.20},
};

struct Status {
  std::string raw;
  double share;
  int group;  // institution effect group: 0-4 sectors, 5 unmapped
};

// Raw reader statuses with relative frequencies.
const std::vector<Status> kStatuses = {
    {"Student > Ph. D. Student", 0.22, 4}, {"Student > Master", 0.12, 4},
    {"Student > Bachelor", 0.06, 4},       {"Researcher", 0.20, 3},
    {"Professor", 0.07, 2},                {"Professor > Associate Professor", 0.06, 2},
    {"Lecturer", 0.03, 0},                 {"Lecturer > Senior Lecturer", 0.01, 0},
    {"Librarian", 0.01, 1},                {"Other", 0.12, 5},
    {"Unspecified", 0.10, 5},
};

std::int64_t poisson(exmap::Engine& eng, double mean) {
  if (mean > 40.0) return std::max<std::int64_t>(0, std::llround(mean + std::sqrt(mean) * exmap::standard_normal(eng)));
  const double l = std::exp(-mean);
  std::int64_t k = 0;
  double p = exmap::uniform_open01(eng);
  while (p > l) {
    ++k;
    p *= exmap::uniform_open01(eng);
  }
  return k;
}

std::size_t pick(exmap::Engine& eng, const std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  double r = exmap::uniform_open01(eng) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (r < w[i]) return i;
    r -= w[i];
  }
  return w.size() - 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the demo corpus"};
  std::string out_dir = "demo";
  std::uint64_t seed = 20171;
  std::size_t papers = 50000, institutions = 60, countries = 12;
  app.add_option("--output", out_dir, "Output directory");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--papers", papers, "Number of papers");
  app.add_option("--institutions", institutions, "Number of institutions");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = out_dir;
  fs::create_directories(dir);
  auto eng = exmap::substream(seed, "demo", 0);

  // Countries and covariates.
  std::ofstream cov(dir / "covariates.tsv");
  cov << "country\tNOI\tNOR\tGNI\tMEG\tCPI\n";
  std::vector<double> country_effect(countries);
  for (std::size_t c = 0; c < countries; ++c) {
    const double gni = 10000 + 50000 * exmap::uniform_open01(eng);
    country_effect[c] = 0.15 * (gni - 35000) / 15000 + 0.1 * exmap::standard_normal(eng);
    char id[24];
    std::snprintf(id, sizeof id, "C%02zu", c + 1);
    cov << id << '\t' << 1 + poisson(eng, 15) << '\t' << 1 + poisson(eng, 60) << '\t' << std::llround(gni) << '\t'
        << std::llround(200 + 1800 * exmap::uniform_open01(eng)) << '\t'
        << std::llround(30 + 60 * exmap::uniform_open01(eng)) << '\n';
  }

  // Institutions: skewed sizes so that some fall below the paper minimum.
  std::ofstream geo(dir / "geo.tsv");
  geo << "institution_id\tname\tcountry\tlat\tlon\n";
  std::vector<std::string> inst_id(institutions);
  std::vector<double> inst_size(institutions), inst_effect(institutions);
  // Per institution: five sector effects, unmapped statuses, citations.
  std::vector<std::array<double, 7>> inst_group(institutions);
  std::vector<std::vector<double>> inst_area(institutions);
  for (std::size_t i = 0; i < institutions; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "I%03zu", i + 1);
    inst_id[i] = id;
    const std::size_t c = i % countries;
    inst_size[i] = 1.0 / std::pow(static_cast<double>(i % 23) + 1.0, 0.9);
    inst_effect[i] = country_effect[c] + 0.4 * exmap::standard_normal(eng);
    for (auto& g : inst_group[i]) g = inst_effect[i] + 0.25 * exmap::standard_normal(eng);
    for (const auto& a : kAreas) inst_area[i].push_back(a.share * (0.2 + exmap::uniform_open01(eng)));
    geo << id << "\tDemo Institute " << (i + 1) << "\tC" << (c < 9 ? "0" : "") << (c + 1) << '\t';
    if (i + 1 != institutions)  // one institution without coordinates
      geo << std::round(1e4 * (-50 + 110 * exmap::uniform_open01(eng))) / 1e4 << '\t'
          << std::round(1e4 * (-170 + 340 * exmap::uniform_open01(eng))) / 1e4;
    else
      geo << '\t';
    geo << '\n';
  }

  std::ofstream corpus(dir / "corpus.jsonl");
  json fixture = json::object();
  std::string last_doi;

  for (std::size_t p = 0; p < papers; ++p) {
    json j;
    char pid[24];
    std::snprintf(pid, sizeof pid, "P%07zu", p + 1);
    j["paper_id"] = pid;
    const int year = 2012 + static_cast<int>(exmap::uniform_open01(eng) * 5);
    j["year"] = year;

    // Institutions and subject codes.
    std::vector<std::size_t> insts{pick(eng, inst_size)};
    while (exmap::uniform_open01(eng) < 0.35 && insts.size() < 4) {
      const auto extra = pick(eng, inst_size);
      if (std::find(insts.begin(), insts.end(), extra) == insts.end()) insts.push_back(extra);
    }
    const std::size_t area = pick(eng, inst_area[insts[0]]);
    std::vector<int> codes{kAreas[area].codes[exmap::uniform_open01(eng) < 0.5 ? 0 : 1]};
    if (exmap::uniform_open01(eng) < 0.25) {
      const auto& other = kAreas[pick(eng, {0.3, 0.25, 0.25, 0.2})];
      const int code = other.codes[exmap::uniform_open01(eng) < 0.5 ? 0 : 1];
      if (code != codes[0]) codes.push_back(code);
    }
    json ij = json::array();
    std::array<double, 7> effect{};
    for (auto i : insts) {
      ij.push_back(inst_id[i]);
      for (std::size_t g = 0; g < effect.size(); ++g) effect[g] += inst_group[i][g] / static_cast<double>(insts.size());
    }
    j["institutions"] = ij;
    j["asjc"] = codes;

    const double age = 2017 - year;
    j["citations"] = poisson(eng, std::exp(0.8 + 0.35 * age + effect[6] + 0.8 * exmap::standard_normal(eng)));
    j["sjr"] = std::round(1000 * (0.1 + 3 * exmap::uniform_open01(eng))) / 1000;

    json counts = json::object();
    std::int64_t readers = 0;
    const double paper_level = 2.3 + 0.9 * exmap::standard_normal(eng);
    for (const auto& st : kStatuses) {
      const auto k = poisson(eng, st.share * std::exp(paper_level + effect[static_cast<std::size_t>(st.group)]));
      if (k > 0) counts[st.raw] = k;
      readers += k;
    }

    const double u = exmap::uniform_open01(eng);
    if (u < 0.92) {
      // DOI papers get reader data through the fetch fixture; a few DOIs are
      // shared by two records.
      std::string doi;
      if (!last_doi.empty() && exmap::uniform_open01(eng) < 0.005) {
        doi = last_doi;
      } else {
        doi = std::string("10.5555/demo.") + pid;
      }
      j["doi"] = (p % 3 == 0 ? "https://doi.org/" : "") + doi;
      last_doi = doi;
      const double f = exmap::uniform_open01(eng);
      json entry;
      if (f < 0.86) {
        entry = {{"status", readers ? "found" : "no_reader"}, {"counts", counts}};
      } else if (f < 0.92) {
        entry = {{"status", "no_reader"}, {"counts", json::object()}};
      } else if (f < 0.96) {
        entry = {{"status", readers ? "found" : "no_reader"}, {"counts", counts}, {"fail_requests", 1}};
      } else {
        entry = {{"status", "error"}, {"fail_requests", 2}};
      }
      if (!fixture.contains(doi)) fixture[doi] = entry;
    } else if (u < 0.96) {
      j["readers"] = counts;
    }
    corpus << j.dump() << '\n';
  }
  std::ofstream(dir / "fetch_fixture.json") << fixture.dump() << '\n';

  const json config = {{"corpus", "corpus.jsonl"},
                       {"covariates", "covariates.tsv"},
                       {"geo", "geo.tsv"},
                       {"fetch_fixture", "fetch_fixture.json"},
                       {"years", {2012, 2016}},
                       {"seed", 1},
                       {"selection", {{"min_papers", 150}, {"min_institutions", 20}, {"min_subjects_for_all", 3}}},
                       {"output", "out"}};
  std::ofstream(dir / "demo_config.json") << config.dump(2) << '\n';
  std::cerr << "wrote " << papers << " papers to " << dir << '\n';
  return 0;
}

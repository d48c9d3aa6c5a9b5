#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "exmap/export.hpp"
#include "exmap/fetch.hpp"
#include "exmap/glmm/report.hpp"
#include "exmap/pipeline.hpp"
#include "exmap/rng.hpp"

namespace exmap {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + p.string());
  out << content;
}

std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    f.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) return f;
    start = pos + 1;
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  return s;
}

std::vector<PaperRecord> load_ingested(const RunConfig& c) {
  auto parsed = parse_paper_file(c.output / "ingest" / "corpus.jsonl");
  if (!parsed.diagnostics.empty())
    throw ConsistencyError("ingested corpus is corrupt: " + parsed.diagnostics.front().message);
  return std::move(parsed.records);
}

std::vector<InstitutionAggregate> load_aggregates(const RunConfig& c) {
  std::ifstream in(c.output / "indicators" / "aggregates.tsv");
  if (!in) throw InputError("cannot open aggregates");
  return read_aggregates(in);
}

std::vector<std::string> subjects_of(std::span<const InstitutionAggregate> aggs) {
  std::set<std::string> s;
  for (const auto& a : aggs) s.insert(a.subject);
  return {s.begin(), s.end()};
}

std::vector<InstitutionAggregate> in_subject(std::span<const InstitutionAggregate> aggs, const std::string& subject) {
  std::vector<InstitutionAggregate> out;
  for (const auto& a : aggs)
    if (a.subject == subject) out.push_back(a);
  return out;
}

// Fit with a file cache keyed by design content, layout and model config.
glmm::FitResult cached(const RunConfig& c, const glmm::StackedDesign& d, std::string_view kind,
                       const std::function<glmm::FitResult()>& compute, bool* hit) {
  const std::string key = hex64(design_hash(d)) + "-" +
                          hex64(fnv1a64(glmm::to_json(c.model).dump() + "|" + std::string(kind)));
  const fs::path p = c.output / "fit" / "cache" / (key + ".json");
  if (fs::exists(p)) {
    if (hit) *hit = true;
    return glmm::fit_from_json(json::parse(read_file(p)));
  }
  if (hit) *hit = false;
  auto r = compute();
  write_file(p, glmm::to_json(r).dump() + "\n");
  return r;
}

}  // namespace

std::string subject_slug(const std::string& subject) {
  if (subject == kAllSubjects) return "all";
  std::string s = subject;
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

std::string file_hash(const fs::path& path) { return hex64(fnv1a64(read_file(path))); }

StageSummary run_ingest(const RunConfig& c) {
  check_inputs(c, "ingest");
  StageSummary summary;
  auto parsed = parse_paper_file(c.corpus, c.years);
  auto dd = dedupe_dois(std::move(parsed.records));

  std::unique_ptr<ReaderFetcher> fetcher;
  if (!c.fetch_fixture.empty()) {
    fetcher = FixtureFetcher::from_file(c.fetch_fixture);
  } else if (!c.fetch_url.empty()) {
    HttpFetcher::Options o;
    o.base_url = c.fetch_url;
    if (const char* t = std::getenv("EXMAP_FETCH_TOKEN")) o.token = t;
    o.max_requests_per_second = c.fetch_rate;
    fetcher = std::make_unique<HttpFetcher>(o);
  }
  std::map<std::string, FetchOutcome> outcomes;
  if (fetcher) outcomes = fetch_reader_counts(dd.fetch_set, *fetcher, c.fetch_in_flight);
  std::vector<Diagnostic> diag = std::move(parsed.diagnostics);
  auto records = merge_reader_data(std::move(dd.records), outcomes, &diag);

  std::string corpus;
  std::size_t unretrievable = 0;
  for (const auto& r : records) {
    corpus += to_json_line(r);
    corpus += '\n';
    unretrievable += r.unretrievable ? 1 : 0;
  }
  write_file(c.output / "ingest" / "corpus.jsonl", corpus);
  std::ostringstream dup;
  write_duplicate_report(dup, dd.duplicates);
  write_file(c.output / "ingest" / "duplicates.tsv", dup.str());
  std::ostringstream dg;
  dg << "line\tmessage\n";
  for (const auto& d : diag) dg << d.line << '\t' << one_line(d.message) << '\n';
  write_file(c.output / "ingest" / "diagnostics.tsv", dg.str());

  summary.diagnostics = diag.size();
  summary.notes.push_back(std::to_string(records.size()) + " records, " + std::to_string(dd.duplicates.size()) +
                          " duplicated DOIs, " + std::to_string(dd.fetch_set.size()) + " DOIs queried, " +
                          std::to_string(unretrievable) + " unretrievable");
  return summary;
}

StageSummary run_indicators(const RunConfig& c) {
  check_inputs(c, "indicators");
  StageSummary summary;
  const auto corpus = load_ingested(c);
  const auto buckets = build_buckets(corpus);
  if (buckets.empty()) throw ConsistencyError("no (year, subject) buckets: corpus is empty");

  const WeightsConfig wc{c.seed, TopShare::from_fraction(c.top_share)};
  const auto weights = compute_weights(corpus, wc);
  std::ostringstream w;
  write_weights(w, corpus, weights);
  write_file(c.output / "indicators" / "weights.jsonl", w.str());

  std::ostringstream th;
  write_threshold_report(th, threshold_report(corpus, buckets, wc.share));
  write_file(c.output / "indicators" / "thresholds.tsv", th.str());

  // Audience thresholds per subject over observed papers.
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].unretrievable) continue;
    std::set<std::string> areas;
    for (int code : corpus[i].asjc_codes) areas.insert(subject_area(code));
    for (const auto& a : areas) members[a].push_back(i);
    members[kAllSubjects].push_back(i);
  }
  std::ostringstream lt;
  lt << "subject\tsector\tp90\tlow_threshold\n";
  for (const auto& [subject, idx] : members) {
    for (Sector s : kAllSectors) {
      std::vector<std::int64_t> v;
      for (auto i : idx) v.push_back(corpus[i].reader_counts[index_of(s)]);
      const auto t = percentile_threshold(v, wc.share);
      lt << subject << '\t' << to_string(s) << '\t' << t << '\t' << (t <= 1 ? 1 : 0) << '\n';
    }
  }
  write_file(c.output / "indicators" / "low_threshold.tsv", lt.str());

  const auto geo = read_geo(c.geo);
  const CovariateTable cov = c.covariates.empty() || !fs::exists(c.covariates) ? CovariateTable{}
                                                                                 : read_covariates(c.covariates);
  const auto aggs = build_aggregates(accumulate(corpus, weights), geo);
  const auto sel = select_institutions(aggs, c.selection);
  std::ostringstream ag;
  write_aggregates(ag, sel.kept, cov);
  write_file(c.output / "indicators" / "aggregates.tsv", ag.str());
  std::ostringstream ex;
  write_exclusions(ex, sel.exclusions);
  write_file(c.output / "indicators" / "exclusions.tsv", ex.str());

  summary.notes.push_back(std::to_string(buckets.size()) + " buckets, " + std::to_string(sel.kept.size()) +
                          " institution-subject cells kept, " + std::to_string(sel.exclusions.size()) +
                          " exclusions");
  return summary;
}

StageSummary run_fit(const RunConfig& c) {
  check_inputs(c, "fit");
  StageSummary summary;
  const auto aggs = load_aggregates(c);
  const CovariateTable cov = c.covariate_names.empty() ? CovariateTable{} : read_covariates(c.covariates);
  std::ostringstream failures;
  failures << "subject\tmodel\treason\n";
  std::size_t fits = 0, hits = 0;

  for (const auto& subject : subjects_of(aggs)) {
    const auto sub = in_subject(aggs, subject);
    const fs::path dir = c.output / "fit" / subject_slug(subject);
    std::vector<Diagnostic> diag;
    glmm::FitResult base;
    try {
      const auto design = glmm::build_design(sub, kAllIndicators, nullptr, &diag);
      bool hit = false;
      base = cached(c, design, "base", [&] { return glmm::fit(design, c.model); }, &hit);
      ++fits;
      hits += hit;
      std::vector<int> mendeley;
      for (Sector s : kAllSectors) mendeley.push_back(static_cast<int>(index_of(indicator_for(s))));
      const auto six = glmm::select_indicators(design, mendeley);
      auto icpt = cached(
          c, glmm::with_layout(six, glmm::FixedLayout::Intercept), "intercept",
          [&] { return glmm::intercept_model(six, c.model).fit; }, &hit);
      ++fits;
      hits += hit;
      write_file(dir / "base.json", glmm::to_json(base).dump() + "\n");
      write_file(dir / "intercept.json", glmm::to_json(icpt).dump() + "\n");
    } catch (const std::exception& e) {
      failures << subject << "\tbase\t" << one_line(e.what()) << '\n';
      summary.notes.push_back("fit failed for " + subject + ": " + one_line(e.what()));
      ++summary.diagnostics;
      continue;
    }

    std::ostringstream report;
    report << "subject: " << subject << "\n\n";
    glmm::write_fit_report(report, base);
    for (const auto& name : c.covariate_names) {
      try {
        const auto z = standardized_covariate(sub, cov, name);
        const auto design = glmm::build_design(sub, kAllIndicators, &z, &diag);
        bool hit = false;
        auto f = cached(c, design, "covariate", [&] { return glmm::fit(design, c.model); }, &hit);
        ++fits;
        hits += hit;
        write_file(dir / ("cov_" + name + ".json"), glmm::to_json(f).dump() + "\n");
        report << "\ncovariate: " << name << "\n\n";
        glmm::write_fit_report(report, f, &base);
      } catch (const std::exception& e) {
        failures << subject << '\t' << name << '\t' << one_line(e.what()) << '\n';
        ++summary.diagnostics;
      }
    }
    for (const auto& d : diag) report << "note: " << d.message << '\n';
    write_file(dir / "report.txt", report.str());
  }
  write_file(c.output / "fit" / "failures.tsv", failures.str());
  summary.notes.push_back(std::to_string(fits) + " fits, " + std::to_string(hits) + " from cache");
  return summary;
}

StageSummary run_export(const RunConfig& c) {
  check_inputs(c, "export");
  StageSummary summary;
  const auto aggs = load_aggregates(c);
  const auto geo = read_geo(c.geo);

  std::map<std::string, std::set<std::string>> failed;  // subject -> models
  if (std::ifstream f(c.output / "fit" / "failures.tsv"); f) {
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line))
      if (!line.empty()) {
        const auto t = split_tab(line);
        failed[t[0]].insert(t.size() > 1 ? t[1] : "base");
      }
  }
  std::map<std::pair<std::string, std::string>, bool> low;
  if (std::ifstream f(c.output / "indicators" / "low_threshold.tsv"); f) {
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line))
      if (!line.empty()) {
        const auto t = split_tab(line);
        if (t.size() >= 4) low[{t[0], t[1]}] = t[3] == "1";
      }
  }

  std::vector<SubjectFits> jobs;
  for (const auto& subject : subjects_of(aggs)) {
    if (failed[subject].count("base")) {
      summary.notes.push_back("no bundles for " + subject + ": its fit failed");
      ++summary.diagnostics;
      continue;
    }
    const fs::path dir = c.output / "fit" / subject_slug(subject);
    auto load = [&](const std::string& file) {
      const fs::path p = dir / file;
      if (!fs::exists(p)) throw ConsistencyError("missing fit for " + subject + ": " + p.string());
      return glmm::fit_from_json(json::parse(read_file(p)));
    };
    SubjectFits sf;
    sf.subject = subject;
    sf.base = load("base.json");
    sf.bookmarked_grand_mean = glmm::logistic(load("intercept.json").params.beta[0]);
    for (const auto& name : c.covariate_names) {
      if (failed[subject].count(name)) continue;
      sf.with_covariate.emplace(name, load("cov_" + name + ".json"));
    }
    for (Sector s : kAllSectors) sf.low_threshold[s] = low[{subject, std::string(to_string(s))}];
    jobs.push_back(std::move(sf));
  }

  std::vector<std::vector<ExportBundle>> built(jobs.size());
  std::vector<std::vector<Diagnostic>> diags(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const auto nj = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < nj; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      built[u] = build_bundles(jobs[u], aggs, geo, &diags[u]);
    } catch (const std::exception& e) {
      errors[u] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw ConsistencyError("export of " + jobs[i].subject + " failed: " + errors[i]);

  const fs::path out = c.output / "export";
  fs::remove_all(out / "bundles");
  json listing = json::array();
  for (std::size_t i = 0; i < built.size(); ++i) {
    for (const auto& d : diags[i]) summary.notes.push_back(d.message);
    summary.diagnostics += diags[i].size();
    for (const auto& b : built[i]) {
      const std::string text = to_json(b).dump() + "\n";
      const std::string name = bundle_file_name(b);
      write_file(out / "bundles" / name, text);
      listing.push_back({{"file", "bundles/" + name},
                         {"subject", b.subject},
                         {"measure", std::string(to_string(b.measure))},
                         {"audience", b.audience ? json(std::string(to_string(*b.audience))) : json(nullptr)},
                         {"covariate", b.covariate ? json(*b.covariate) : json(nullptr)},
                         {"entries", b.entries.size()},
                         {"hash", hex64(fnv1a64(text))}});
    }
  }
  std::sort(listing.begin(), listing.end(),
            [](const json& a, const json& b) { return a.at("file").get<std::string>() < b.at("file").get<std::string>(); });
  json manifest = {{"schema_version", kBundleSchemaVersion},
                   {"seed", c.seed},
                   {"top_share", c.top_share},
                   {"model", glmm::to_json(c.model)},
                   {"selection",
                    {{"min_papers", c.selection.min_papers},
                     {"min_institutions", c.selection.min_institutions},
                     {"min_subjects_for_all", c.selection.min_subjects_for_all}}},
                   {"covariate_names", c.covariate_names},
                   {"corpus_hash", file_hash(c.corpus)},
                   {"bundles", listing}};
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
  summary.notes.push_back(std::to_string(listing.size()) + " bundles written");
  return summary;
}

}  // namespace exmap

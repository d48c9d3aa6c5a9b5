#include <fstream>

#include "exmap/glmm/report.hpp"
#include "exmap/pipeline.hpp"

namespace exmap {

using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  const fs::path p = j.at(key).get<std::string>();
  if (p.empty()) return {};
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  RunConfig c;
  try {
    c.corpus = resolve(base, j, "corpus");
    c.covariates = resolve(base, j, "covariates");
    c.geo = resolve(base, j, "geo");
    c.fetch_fixture = resolve(base, j, "fetch_fixture");
    c.fetch_url = j.value("fetch_url", std::string{});
    c.fetch_rate = j.value("fetch_rate", 0.0);
    c.fetch_in_flight = j.value("fetch_in_flight", std::size_t{4});
    if (j.contains("years")) {
      const auto& y = j.at("years");
      c.years = {y.at(0).get<int>(), y.at(1).get<int>()};
    }
    c.seed = j.value("seed", c.seed);
    c.top_share = j.value("top_share", c.top_share);
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      c.selection.min_papers = s.value("min_papers", c.selection.min_papers);
      c.selection.min_institutions = s.value("min_institutions", c.selection.min_institutions);
      c.selection.min_subjects_for_all = s.value("min_subjects_for_all", c.selection.min_subjects_for_all);
    }
    if (j.contains("model")) c.model = glmm::fit_config_from_json(j.at("model"));
    if (j.contains("covariate_names")) c.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    if (j.contains("output")) c.output = resolve(base, j, "output");
    c.jobs = j.value("jobs", 0);
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  return {{"corpus", c.corpus.string()},
          {"covariates", c.covariates.string()},
          {"geo", c.geo.string()},
          {"fetch_fixture", c.fetch_fixture.string()},
          {"fetch_url", c.fetch_url},
          {"years", {c.years.first, c.years.last}},
          {"seed", c.seed},
          {"top_share", c.top_share},
          {"selection",
           {{"min_papers", c.selection.min_papers},
            {"min_institutions", c.selection.min_institutions},
            {"min_subjects_for_all", c.selection.min_subjects_for_all}}},
          {"model", glmm::to_json(c.model)},
          {"covariate_names", c.covariate_names}};
}

void check_inputs(const RunConfig& c, std::string_view stage) {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) throw InputError(std::string("no ") + what + " configured");
    if (!fs::exists(p)) throw InputError(std::string(what) + " not found: " + p.string());
  };
  if (stage == "ingest") {
    need(c.corpus, "corpus");
    if (!c.fetch_fixture.empty()) need(c.fetch_fixture, "fetch fixture");
  } else if (stage == "indicators") {
    need(c.output / "ingest" / "corpus.jsonl", "ingested corpus (run ingest first)");
    need(c.geo, "geo table");
  } else if (stage == "fit") {
    need(c.output / "indicators" / "aggregates.tsv", "aggregates (run indicators first)");
    if (!c.covariate_names.empty()) need(c.covariates, "covariate table");
  } else if (stage == "export") {
    need(c.output / "indicators" / "aggregates.tsv", "aggregates (run indicators first)");
    need(c.output / "fit", "fit directory (run fit first)");
    need(c.corpus, "corpus");
    need(c.geo, "geo table");
  }
}

}  // namespace exmap

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "exmap/export.hpp"
#include "exmap/glmm/report.hpp"
#include "exmap/pipeline.hpp"

using namespace exmap;

namespace {

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("exmap_test_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kCli = EXMAP_CLI_PATH;
const std::string kDemo = EXMAP_DEMO_TOOL_PATH;

}  // namespace

TEST_CASE("cli exit codes") {
  const auto dir = scratch("exit");
  CHECK(run(kCli + " ingest --config " + (dir / "nope.json").string()) == 2);
  std::ofstream(dir / "c.json") << R"({"corpus": "missing.jsonl", "output": "out"})";
  CHECK(run(kCli + " ingest --config " + (dir / "c.json").string()) == 2);
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK(run(kCli + " ingest --config " + (dir / "bad.json").string()) == 2);
  CHECK(run(kCli + " indicators --config " + (dir / "c.json").string()) == 2);
  CHECK(run(kCli + " frobnicate --config " + (dir / "c.json").string()) != 0);
}

TEST_CASE("ingest keeps going past a corrupt line") {
  const auto dir = scratch("ingest");
  REQUIRE(run(kDemo + " --output " + dir.string() + " --papers 2000") == 0);
  {
    std::ifstream in(dir / "corpus.jsonl");
    std::ofstream out(dir / "small.jsonl");
    std::string line;
    for (int i = 0; i < 100 && std::getline(in, line); ++i) {
      out << line << '\n';
      if (i == 40) out << "{\"paper_id\": \"broken\", \"year\": \n";
    }
  }
  auto cfg = load_run_config(dir / "demo_config.json");
  cfg.corpus = dir / "small.jsonl";
  cfg.output = dir / "out";
  const auto s = run_ingest(cfg);
  CHECK(s.diagnostics >= 1);
  CHECK(count_lines(dir / "out" / "ingest" / "corpus.jsonl") == 100);
  CHECK(slurp(dir / "out" / "ingest" / "diagnostics.tsv").find("42") != std::string::npos);
}

TEST_CASE("end-to-end demo run") {
  const auto dir = scratch("e2e");
  REQUIRE(run(kDemo + " --output " + dir.string()) == 0);
  const auto cfg_path = (dir / "demo_config.json").string();
  REQUIRE(run(kCli + " all --config " + cfg_path) == 0);
  const auto out = dir / "out";

  const auto thresholds = slurp(out / "indicators" / "thresholds.tsv");
  CHECK(thresholds.rfind("asjc\tLibrarians_p90\tLibrarians_average", 0) == 0);

  const auto manifest = nlohmann::json::parse(slurp(out / "export" / "manifest.json"));
  const auto cfg = load_run_config(dir / "demo_config.json");
  CHECK(manifest["corpus_hash"] == file_hash(cfg.corpus));
  REQUIRE(manifest["bundles"].size() > 0);
  std::size_t checked = 0;
  for (const auto& b : manifest["bundles"]) {
    const auto path = out / "export" / b["file"].get<std::string>();
    CHECK(file_hash(path) == b["hash"]);
    const auto j = nlohmann::json::parse(slurp(path));
    CHECK(validate_bundle(j).empty());
    CHECK_NOTHROW(bundle_from_json(j));
    ++checked;
  }
  CHECK(checked == manifest["bundles"].size());

  // Rerun: every fit is served from the cache and the manifest is unchanged.
  const auto before = slurp(out / "export" / "manifest.json");
  const auto fit_summary = run_fit(cfg);
  REQUIRE_FALSE(fit_summary.notes.empty());
  const auto& note = fit_summary.notes.back();
  const auto fits = note.substr(0, note.find(' '));
  CHECK(note == fits + " fits, " + fits + " from cache");
  run_export(cfg);
  CHECK(slurp(out / "export" / "manifest.json") == before);

  // Forced pseudo-likelihood.
  REQUIRE(run(kCli + " fit --config " + cfg_path + " --method pql") == 0);
  const auto base = glmm::fit_from_json(nlohmann::json::parse(slurp(out / "fit" / "1600" / "base.json")));
  CHECK(base.method == glmm::EstimationMethod::PseudoLikelihood);
}

TEST_CASE("seed only matters through unretrievable papers") {
  const auto dir = scratch("seed");
  REQUIRE(run(kDemo + " --output " + dir.string() + " --papers 3000") == 0);
  // Strip every paper without inline readers: nothing left to draw for.
  {
    std::ifstream in(dir / "corpus.jsonl");
    std::ofstream out(dir / "inline.jsonl");
    for (std::string line; std::getline(in, line);)
      if (line.find("\"readers\"") != std::string::npos) out << line << '\n';
  }
  auto cfg = load_run_config(dir / "demo_config.json");
  cfg.corpus = dir / "inline.jsonl";
  cfg.fetch_fixture.clear();
  cfg.fetch_url.clear();
  std::string first;
  for (std::uint64_t seed : {1u, 2u}) {
    cfg.seed = seed;
    cfg.output = dir / ("out" + std::to_string(seed));
    run_ingest(cfg);
    run_indicators(cfg);
    const auto w = slurp(cfg.output / "indicators" / "weights.jsonl");
    CHECK_FALSE(w.empty());
    if (first.empty())
      first = w;
    else
      CHECK(w == first);
  }
}

// exmap: run the excellence-mapping pipeline stage by stage.
//
//   exmap ingest --config run.json
//   exmap all --config run.json --seed 7 --jobs 4 --output out/

#include <iostream>
#include <omp.h>

#include <CLI11.hpp>

#include "exmap/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;

void print(const char* stage, const exmap::StageSummary& s) {
  std::cerr << stage << ": ";
  for (std::size_t i = 0; i < s.notes.size(); ++i) std::cerr << (i ? "; " : "") << s.notes[i];
  if (s.diagnostics) std::cerr << " (" << s.diagnostics << " diagnostics)";
  std::cerr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excellence mapping: top-10% indicators, multilevel models, map bundles"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, output, method;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--seed", seed, "Seed for random percentiles");
  app.add_option("--jobs", jobs, "Upper bound on worker threads")->check(CLI::NonNegativeNumber);
  app.add_option("--method", method, "Estimation method")->check(CLI::IsMember({"auto", "ml", "pql"}));
  app.add_option("--output", output, "Output directory");

  const std::vector<std::string> stages = {"ingest", "indicators", "fit", "export", "all"};
  for (const auto& s : stages) app.add_subcommand(s, s == "all" ? "Run every stage in order" : "Run the " + s + " stage");

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    auto cfg = exmap::load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!output.empty()) cfg.output = output;
    if (!method.empty()) cfg.model.method = *exmap::glmm::method_from_string(method);
    if (jobs > 0) cfg.jobs = jobs;
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
    cfg.fetch_in_flight = cfg.jobs > 0 ? static_cast<std::size_t>(cfg.jobs) : cfg.fetch_in_flight;

    if (cmd == "ingest" || cmd == "all") print("ingest", exmap::run_ingest(cfg));
    if (cmd == "indicators" || cmd == "all") print("indicators", exmap::run_indicators(cfg));
    if (cmd == "fit" || cmd == "all") print("fit", exmap::run_fit(cfg));
    if (cmd == "export" || cmd == "all") print("export", exmap::run_export(cfg));
  } catch (const exmap::InputError& e) {
    std::cerr << "exmap: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "exmap: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

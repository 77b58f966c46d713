// Command-line front end: simulation, stability analysis, radio planning,
// parameter sweeps and the bundled scenario corpus.
//
// Exit codes: 0 all verdicts stable/feasible, 2 some verdict unstable or
// infeasible, 1 execution error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "platoon/csv.hpp"
#include "platoon/scenario.hpp"

namespace {

using namespace platoon;

struct CommonFlags {
  std::string config;
  std::string out = "out";
  std::optional<double> dt;
  std::optional<long> seed;  // reserved; runs are deterministic
  int jobs = 1;
  std::string corpus = kDefaultCorpusDir.string();
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config) {
  auto* config = cmd->add_option("--config", flags.config, "Configuration JSON");
  if (needs_config) config->required();
  cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
  cmd->add_option("--dt", flags.dt, "Override the integration step (s)");
  cmd->add_option("--seed", flags.seed, "Reserved; dynamics are deterministic");
  cmd->add_option("--jobs", flags.jobs, "Worker threads for sweeps")->capture_default_str();
  cmd->add_option("--corpus", flags.corpus, "Scenario corpus directory")->capture_default_str();
}

RunOptions options_from(const CommonFlags& flags) {
  RunOptions options;
  options.out_dir = flags.out;
  options.dt_override = flags.dt;
  options.jobs = flags.jobs;
  options.corpus_dir = flags.corpus;
  return options;
}

template <typename Doc>
const Doc& expect(const ConfigDocument& doc, const char* kind) {
  const auto* typed = std::get_if<Doc>(&doc);
  if (typed == nullptr) {
    throw ConfigError(document_id(doc) + ": expected a '" + kind + "' document");
  }
  return *typed;
}

int report(const RunManifest& manifest) {
  std::cout << manifest.scenario_id << " [" << manifest.kind << "] "
            << (manifest.all_stable ? "stable/feasible" : "UNSTABLE/INFEASIBLE") << '\n';
  std::cout << "verdicts: " << manifest.verdicts.dump() << '\n';
  if (!manifest.metrics.empty()) std::cout << "metrics: " << manifest.metrics.dump() << '\n';
  for (const auto& artifact : manifest.artifacts) std::cout << "wrote " << artifact << '\n';
  return exit_code(manifest);
}

int run_region(const std::vector<double>& taus, int points, const std::string& out) {
  std::filesystem::create_directories(out);
  for (double tau : taus) {
    const auto boundary = plant_region_boundary(tau, points);
    std::ostringstream name;
    name << "region_tau_" << csv::format(tau) << ".csv";
    const auto path = std::filesystem::path(out) / name.str();
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + path.string());
    write_region_csv(file, boundary);
    std::cout << "tau=" << tau << " corner eta=" << boundary.back().eta << " wrote "
              << path.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-aware V2I platoon control: simulation, stability regions, radio planning"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a platoon and check its stability");
  add_common(simulate_cmd, flags, true);

  auto* stability_cmd = app.add_subcommand("stability", "Plant stability region tools");
  stability_cmd->require_subcommand(1);
  std::vector<double> taus{0.1, 0.2, 0.3};
  int region_points = 200;
  auto* region_cmd = stability_cmd->add_subcommand("region", "Export the plant stability boundary");
  region_cmd->add_option("--tau", taus, "Delays (s)")->capture_default_str();
  region_cmd->add_option("--points", region_points, "Boundary samples")->capture_default_str();
  region_cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
  auto* check_cmd = stability_cmd->add_subcommand("check", "Plant stability verdict for a config");
  add_common(check_cmd, flags, true);

  auto* string_cmd = app.add_subcommand("string", "String stability tools");
  string_cmd->require_subcommand(1);
  auto* string_check_cmd = string_cmd->add_subcommand("check", "String stability verdicts");
  add_common(string_check_cmd, flags, true);

  auto* radio_cmd = app.add_subcommand("radio", "Radio and handover planning");
  radio_cmd->require_subcommand(1);
  auto* plan_cmd = radio_cmd->add_subcommand("plan", "Coverage, velocity and ISLD planner");
  add_common(plan_cmd, flags, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sweep_cmd, flags, true);

  auto* corpus_cmd = app.add_subcommand("corpus", "Bundled scenario corpus");
  corpus_cmd->require_subcommand(1);
  std::string corpus_id;
  auto* corpus_run = corpus_cmd->add_subcommand("run", "Run a corpus scenario by id");
  corpus_run->add_option("id", corpus_id, "Scenario id, e.g. fig3c")->required();
  add_common(corpus_run, flags, false);
  auto* corpus_list = corpus_cmd->add_subcommand("list", "List corpus scenario ids");
  corpus_list->add_option("--corpus", flags.corpus, "Scenario corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto options = options_from(flags);
    if (*simulate_cmd) {
      const auto doc = load_config(flags.config);
      return report(run_simulation(expect<SimulationDocument>(doc, "simulation"), options));
    }
    if (*region_cmd) return run_region(taus, region_points, flags.out);
    if (*check_cmd) {
      const auto doc = load_config(flags.config);
      return report(run_stability_check(expect<SimulationDocument>(doc, "simulation"), options));
    }
    if (*string_check_cmd) {
      const auto doc = load_config(flags.config);
      return report(run_string_check(expect<SimulationDocument>(doc, "simulation"), options));
    }
    if (*plan_cmd) {
      const auto doc = load_config(flags.config);
      return report(run_radio(expect<RadioPlanDocument>(doc, "radio_plan"), options));
    }
    if (*sweep_cmd) {
      const auto doc = load_config(flags.config);
      return report(run_sweep_document(expect<SweepDocument>(doc, "sweep"), options));
    }
    if (*corpus_list) {
      for (const auto& id : list_corpus(flags.corpus)) std::cout << id << '\n';
      return 0;
    }
    if (*corpus_run) return report(run_scenario(corpus_id, options));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

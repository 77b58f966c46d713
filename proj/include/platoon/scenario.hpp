#ifndef PLATOON_SCENARIO_HPP
#define PLATOON_SCENARIO_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "platoon/config.hpp"
#include "platoon/radio.hpp"

namespace platoon {

#ifdef PLATOON_SCENARIO_DIR
inline const std::filesystem::path kDefaultCorpusDir = PLATOON_SCENARIO_DIR;
#else
inline const std::filesystem::path kDefaultCorpusDir = "scenarios";
#endif

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<double> dt_override;
  int jobs = 1;
  std::filesystem::path corpus_dir = kDefaultCorpusDir;
};

/// Everything needed to reproduce and audit one run. Written as
/// manifest.json next to the artifacts.
struct RunManifest {
  std::string scenario_id;
  std::string kind;
  nlohmann::json config;
  nlohmann::json integrator;
  std::vector<std::string> artifacts;
  double wall_clock_seconds = 0.0;
  nlohmann::json verdicts = nlohmann::json::object();
  nlohmann::json metrics = nlohmann::json::object();
  bool all_stable = true;  // every verdict stable/feasible

  nlohmann::json to_json() const;
};

/// 0 when every verdict is stable/feasible, 2 otherwise.
int exit_code(const RunManifest& manifest);

/// Simulation plus every stability verdict for one scenario.
struct SimulationReport {
  Trajectory trajectory;
  LambdaEta lambda_eta;
  StabilityVerdict plant;
  StabilityVerdict string_sufficient;
  StabilityVerdict string_exact;
  std::optional<double> max_headway;  // empty when no feasible headway exists
  std::vector<double> peak_errors;
  std::optional<double> settling;
};

SimulationReport evaluate(const SimulationDocument& doc);

/// Applies CLI overrides (dt) and revalidates.
SimulationDocument with_overrides(SimulationDocument doc, const RunOptions& options);

struct SweepRow {
  std::size_t index = 0;
  ControlGains gains;
  double delay = 0.0;
  int m_followers = 0;
  double headway = 0.0;
  std::string status = "ok";  // ok | diverged | error: <message>
  std::optional<bool> plant_stable;
  std::optional<bool> string_sufficient;
  std::optional<bool> string_exact;
  std::vector<double> peak_errors;
  std::optional<double> settling;
};

/// One row per grid combination, in grid order (gains, delay, m_followers,
/// headway; last axis fastest). Rows run on up to `jobs` threads; a failing
/// row records its error and the sweep continues.
std::vector<SweepRow> run_sweep(const SweepDocument& doc, int jobs);

/// CSV "index,k_v,k_vo,k_x,k_xo,delay,m_followers,headway,plant_stable,
/// string_sufficient,string_exact,peak_errors,max_peak,settling_time,status";
/// peak_errors is ';'-separated.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Radio plan rows over the document's grid (carrier, handover, threshold;
/// last axis fastest). Infeasible cells throw InfeasibleError.
std::vector<PlannerRow> run_radio_plan(const RadioPlanDocument& doc);

/// Full pipeline for a simulation document: trajectory.csv, magnitude.csv,
/// manifest.json.
RunManifest run_simulation(const SimulationDocument& doc, const RunOptions& options);
/// Plant verdict with a spectral-abscissa cross-check; region.csv.
RunManifest run_stability_check(const SimulationDocument& doc, const RunOptions& options);
/// Sufficient and exact string verdicts, headway bound; magnitude.csv.
RunManifest run_string_check(const SimulationDocument& doc, const RunOptions& options);
RunManifest run_radio(const RadioPlanDocument& doc, const RunOptions& options);
RunManifest run_sweep_document(const SweepDocument& doc, const RunOptions& options);

/// Dispatches on the document kind. Groups run their radio-plan members and
/// write one merged planner.csv.
RunManifest run_document(const ConfigDocument& doc, const RunOptions& options);

/// Accepts a corpus id (looked up as <corpus_dir>/<id>.json) or a file path.
std::filesystem::path resolve_scenario(const std::string& name_or_path,
                                       const std::filesystem::path& corpus_dir);
RunManifest run_scenario(const std::string& name_or_path, const RunOptions& options);

std::vector<std::string> list_corpus(const std::filesystem::path& corpus_dir);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& out_dir);

}  // namespace platoon

#endif  // PLATOON_SCENARIO_HPP

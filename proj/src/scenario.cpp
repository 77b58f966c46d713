#include "platoon/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include "platoon/csv.hpp"

namespace platoon {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json optional_number(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

json verdict_json(const StabilityVerdict& verdict, const char* witness_name) {
  return {{"stable", verdict.stable},
          {"margin", verdict.margin},
          {witness_name, optional_number(verdict.witness)}};
}

std::ofstream open_artifact(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write artifact " + path.string());
  return out;
}

fs::path prepare_out_dir(const RunOptions& options) {
  fs::create_directories(options.out_dir);
  return options.out_dir;
}

json integrator_json(const SimulationScenario& s) {
  return {{"scheme", to_string(s.integrator)},
          {"dt", s.dt},
          {"delay_steps", s.delay_steps()},
          {"t_end", s.t_end}};
}

json snapshot_with_dt(json snapshot, const SimulationDocument& doc) {
  if (snapshot.is_object()) snapshot["dt"] = doc.scenario.dt;
  return snapshot;
}

FrequencySweepConfig sweep_for(const SimulationDocument& doc) {
  const auto& s = doc.scenario;
  return doc.sweep.value_or(default_sweep(s.gains, s.platoon.headway));
}

RadioParams cell_params(const RadioPlanDocument& doc, double fc, double fh, double rth) {
  RadioParams rp = doc.radio;
  rp.carrier_freq_hz = fc;
  rp.handover_freq = fh;
  rp.rate_threshold_bps = rth;
  return rp;
}

std::string format_bool(const std::optional<bool>& value) {
  if (!value) return "";
  return *value ? "true" : "false";
}

SweepRow evaluate_row(const SweepDocument& doc, std::size_t index) {
  const auto& g = doc.grid;
  std::size_t rest = index;
  const std::size_t ih = rest % g.headways.size();
  rest /= g.headways.size();
  const std::size_t im = rest % g.m_followers.size();
  rest /= g.m_followers.size();
  const std::size_t id = rest % g.delays.size();
  rest /= g.delays.size();
  const std::size_t ig = rest;

  SweepRow row;
  row.index = index;
  row.gains = g.gains[ig];
  row.delay = g.delays[id];
  row.m_followers = g.m_followers[im];
  row.headway = g.headways[ih];

  SimulationDocument point = doc.base;
  point.id = doc.id + "/" + std::to_string(index);
  auto& s = point.scenario;
  s.gains = row.gains;
  s.platoon.delay = row.delay;
  s.platoon.m_followers = row.m_followers;
  s.platoon.headway = row.headway;
  // Overridden headway invalidates an explicit frequency sweep bound.
  if (point.sweep && point.sweep->w_max < sweep_tail_bound(s.gains, s.platoon.headway)) {
    point.sweep.reset();
  }
  try {
    validate(s);
    const auto report = evaluate(point);
    row.plant_stable = report.plant.stable;
    row.string_sufficient = report.string_sufficient.stable;
    row.string_exact = report.string_exact.stable;
    row.peak_errors = report.peak_errors;
    row.settling = report.settling;
    if (report.trajectory.diverged) row.status = "diverged";
  } catch (const std::exception& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), ',', ';');
    row.status = "error: " + message;
  }
  return row;
}

}  // namespace

json RunManifest::to_json() const {
  return {{"scenario_id", scenario_id},
          {"kind", kind},
          {"config", config},
          {"integrator", integrator},
          {"artifacts", artifacts},
          {"wall_clock_seconds", wall_clock_seconds},
          {"verdicts", verdicts},
          {"metrics", metrics},
          {"all_stable", all_stable}};
}

int exit_code(const RunManifest& manifest) { return manifest.all_stable ? 0 : 2; }

SimulationReport evaluate(const SimulationDocument& doc) {
  const auto& s = doc.scenario;
  SimulationReport report;
  report.trajectory = simulate(s);
  report.lambda_eta = derive_lambda_eta(s.gains, s.platoon.headway);
  report.plant = plant_stability_check(report.lambda_eta, s.platoon.delay);
  report.string_sufficient = string_stability_sufficient(s.gains, s.platoon.headway, s.platoon.delay);
  report.string_exact =
      string_stability_exact(s.gains, s.platoon.headway, s.platoon.delay, sweep_for(doc));
  try {
    report.max_headway = max_headway(s.gains, s.platoon.delay);
  } catch (const InfeasibleError&) {
    report.max_headway.reset();
  }
  report.peak_errors = peak_spacing_errors(report.trajectory);
  report.settling = settling_time(report.trajectory, doc.settling_tolerance);
  return report;
}

SimulationDocument with_overrides(SimulationDocument doc, const RunOptions& options) {
  if (options.dt_override) {
    doc.scenario.dt = *options.dt_override;
    try {
      validate(doc.scenario);
    } catch (const ValidationError& e) {
      throw ConfigError(doc.id + ": invalid configuration after --dt override: " + e.what());
    }
  }
  return doc;
}

std::vector<SweepRow> run_sweep(const SweepDocument& doc, int jobs) {
  const std::size_t total = doc.grid.size();
  std::vector<SweepRow> rows(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) rows[k] = evaluate_row(doc, k);
  };
  const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (threads == 1 || total <= 1) {
    worker();
    return rows;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, total); ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  csv::write_row(out, {"index", "k_v", "k_vo", "k_x", "k_xo", "delay", "m_followers", "headway",
                       "plant_stable", "string_sufficient", "string_exact", "peak_errors",
                       "max_peak", "settling_time", "status"});
  for (const auto& row : rows) {
    std::string peaks;
    double max_peak = 0.0;
    for (std::size_t k = 0; k < row.peak_errors.size(); ++k) {
      if (k > 0) peaks += ';';
      peaks += csv::format(row.peak_errors[k]);
      max_peak = std::max(max_peak, row.peak_errors[k]);
    }
    csv::write_row(out, {std::to_string(row.index), csv::format(row.gains.k_v),
                         csv::format(row.gains.k_vo), csv::format(row.gains.k_x),
                         csv::format(row.gains.k_xo), csv::format(row.delay),
                         std::to_string(row.m_followers), csv::format(row.headway),
                         format_bool(row.plant_stable), format_bool(row.string_sufficient),
                         format_bool(row.string_exact), peaks,
                         row.peak_errors.empty() ? "" : csv::format(max_peak),
                         row.settling ? csv::format(*row.settling) : "", row.status});
  }
}

std::vector<PlannerRow> run_radio_plan(const RadioPlanDocument& doc) {
  std::vector<PlannerRow> rows;
  for (double fc : doc.carrier_freqs_hz) {
    for (double fh : doc.handover_freqs) {
      for (double rth : doc.rate_thresholds_bps) {
        rows.push_back(plan(doc.radio.m_followers, doc.headway, doc.standstill,
                            cell_params(doc, fc, fh, rth)));
      }
    }
  }
  return rows;
}

RunManifest run_simulation(const SimulationDocument& input, const RunOptions& options) {
  const Stopwatch clock;
  const auto doc = with_overrides(input, options);
  const auto out_dir = prepare_out_dir(options);
  const auto report = evaluate(doc);
  const auto& s = doc.scenario;

  RunManifest manifest;
  manifest.scenario_id = doc.id;
  manifest.kind = "simulation";
  manifest.config = snapshot_with_dt(doc.snapshot, doc);
  manifest.integrator = integrator_json(s);

  const auto trajectory_path = out_dir / "trajectory.csv";
  {
    auto out = open_artifact(trajectory_path);
    write_trajectory_csv(out, report.trajectory);
  }
  const auto magnitude_path = out_dir / "magnitude.csv";
  {
    auto out = open_artifact(magnitude_path);
    write_magnitude_csv(out, s.gains, s.platoon.headway, s.platoon.delay, sweep_for(doc));
  }
  manifest.artifacts = {trajectory_path.string(), magnitude_path.string()};

  manifest.verdicts = {
      {"plant", verdict_json(report.plant, "lambda_star")},
      {"string_sufficient", verdict_json(report.string_sufficient, "witness")},
      {"string_exact", verdict_json(report.string_exact, "w")},
      {"diverged", report.trajectory.diverged},
  };
  manifest.metrics = {
      {"lambda", report.lambda_eta.lambda},
      {"eta", report.lambda_eta.eta},
      {"peak_spacing_errors", report.peak_errors},
      {"settling_tolerance", doc.settling_tolerance},
      {"settling_time", optional_number(report.settling)},
      {"max_headway", optional_number(report.max_headway)},
      {"samples", report.trajectory.samples()},
  };
  manifest.all_stable =
      report.plant.stable && report.string_exact.stable && !report.trajectory.diverged;
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, out_dir);
  return manifest;
}

RunManifest run_stability_check(const SimulationDocument& doc, const RunOptions& options) {
  const Stopwatch clock;
  const auto out_dir = prepare_out_dir(options);
  const auto& s = doc.scenario;
  const auto le = derive_lambda_eta(s.gains, s.platoon.headway);
  const auto plant = plant_stability_check(le, s.platoon.delay);
  const auto abscissa = spectral_abscissa(le, s.platoon.delay);

  RunManifest manifest;
  manifest.scenario_id = doc.id;
  manifest.kind = "stability_check";
  manifest.config = doc.snapshot;
  const auto region_path = out_dir / "region.csv";
  {
    auto out = open_artifact(region_path);
    write_region_csv(out, plant_region_boundary(s.platoon.delay, 200));
  }
  manifest.artifacts = {region_path.string()};
  manifest.verdicts = {{"plant", verdict_json(plant, "lambda_star")}};
  manifest.metrics = {{"lambda", le.lambda},
                      {"eta", le.eta},
                      {"corner_eta", plant_region_boundary(s.platoon.delay, 2).back().eta},
                      {"spectral_abscissa", abscissa.value},
                      {"spectral_abscissa_coarse", abscissa.coarse},
                      {"roots_found", abscissa.roots_found}};
  manifest.all_stable = plant.stable;
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, out_dir);
  return manifest;
}

RunManifest run_string_check(const SimulationDocument& doc, const RunOptions& options) {
  const Stopwatch clock;
  const auto out_dir = prepare_out_dir(options);
  const auto& s = doc.scenario;
  const auto sufficient = string_stability_sufficient(s.gains, s.platoon.headway, s.platoon.delay);
  const auto sweep = sweep_for(doc);
  const auto exact = string_stability_exact(s.gains, s.platoon.headway, s.platoon.delay, sweep);
  std::optional<double> headway_bound;
  try {
    headway_bound = max_headway(s.gains, s.platoon.delay);
  } catch (const InfeasibleError&) {
  }

  RunManifest manifest;
  manifest.scenario_id = doc.id;
  manifest.kind = "string_check";
  manifest.config = doc.snapshot;
  const auto magnitude_path = out_dir / "magnitude.csv";
  {
    auto out = open_artifact(magnitude_path);
    write_magnitude_csv(out, s.gains, s.platoon.headway, s.platoon.delay, sweep);
  }
  manifest.artifacts = {magnitude_path.string()};
  manifest.verdicts = {{"string_sufficient", verdict_json(sufficient, "witness")},
                       {"string_exact", verdict_json(exact, "w")}};
  manifest.metrics = {{"max_headway", optional_number(headway_bound)},
                      {"sweep_w_max", sweep.w_max},
                      {"sweep_step", sweep.step}};
  manifest.all_stable = exact.stable;
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, out_dir);
  return manifest;
}

namespace {

// Plans every cell, collecting infeasible cells instead of aborting.
void plan_cells(const RadioPlanDocument& doc, std::vector<PlannerRow>& rows, json& infeasible) {
  for (double fc : doc.carrier_freqs_hz) {
    for (double fh : doc.handover_freqs) {
      for (double rth : doc.rate_thresholds_bps) {
        try {
          rows.push_back(plan(doc.radio.m_followers, doc.headway, doc.standstill,
                              cell_params(doc, fc, fh, rth)));
        } catch (const InfeasibleError& e) {
          infeasible.push_back(
              {{"fc", fc}, {"f_handover", fh}, {"Rth", rth}, {"reason", e.what()}});
        }
      }
    }
  }
}

RunManifest write_radio_manifest(const std::string& id, json config,
                                 const std::vector<PlannerRow>& rows, const json& infeasible,
                                 const RunOptions& options, const Stopwatch& clock) {
  const auto out_dir = prepare_out_dir(options);
  RunManifest manifest;
  manifest.scenario_id = id;
  manifest.kind = "radio_plan";
  manifest.config = std::move(config);
  const auto planner_path = out_dir / "planner.csv";
  {
    auto out = open_artifact(planner_path);
    write_planner_csv(out, rows);
  }
  manifest.artifacts = {planner_path.string()};
  manifest.verdicts = {{"feasible_cells", rows.size()}, {"infeasible_cells", infeasible}};
  json v_max = json::array();
  for (const auto& row : rows) v_max.push_back(row.v_max);
  manifest.metrics = {{"v_max", v_max}};
  manifest.all_stable = infeasible.empty();
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, out_dir);
  return manifest;
}

}  // namespace

RunManifest run_radio(const RadioPlanDocument& doc, const RunOptions& options) {
  const Stopwatch clock;
  std::vector<PlannerRow> rows;
  json infeasible = json::array();
  plan_cells(doc, rows, infeasible);
  return write_radio_manifest(doc.id, doc.snapshot, rows, infeasible, options, clock);
}

RunManifest run_sweep_document(const SweepDocument& input, const RunOptions& options) {
  const Stopwatch clock;
  SweepDocument doc = input;
  doc.base = with_overrides(doc.base, options);
  const auto out_dir = prepare_out_dir(options);
  const auto rows = run_sweep(doc, options.jobs);

  RunManifest manifest;
  manifest.scenario_id = doc.id;
  manifest.kind = "sweep";
  manifest.config = doc.snapshot;
  manifest.integrator = integrator_json(doc.base.scenario);
  const auto sweep_path = out_dir / "sweep.csv";
  {
    auto out = open_artifact(sweep_path);
    write_sweep_csv(out, rows);
  }
  manifest.artifacts = {sweep_path.string()};
  std::size_t failed = 0;
  std::size_t unstable = 0;
  for (const auto& row : rows) {
    if (row.status != "ok") ++failed;
    if ((row.plant_stable && !*row.plant_stable) || (row.string_exact && !*row.string_exact)) {
      ++unstable;
    }
  }
  manifest.verdicts = {{"rows", rows.size()}, {"unstable_rows", unstable}, {"failed_rows", failed}};
  manifest.metrics = {{"jobs", options.jobs}};
  manifest.all_stable = failed == 0 && unstable == 0;
  manifest.wall_clock_seconds = clock.seconds();
  write_manifest(manifest, out_dir);
  return manifest;
}

RunManifest run_document(const ConfigDocument& document, const RunOptions& options) {
  if (const auto* sim = std::get_if<SimulationDocument>(&document)) return run_simulation(*sim, options);
  if (const auto* radio = std::get_if<RadioPlanDocument>(&document)) return run_radio(*radio, options);
  if (const auto* sweep = std::get_if<SweepDocument>(&document)) return run_sweep_document(*sweep, options);

  const auto& group = std::get<GroupDocument>(document);
  const Stopwatch clock;
  std::vector<PlannerRow> rows;
  json infeasible = json::array();
  json members = json::array();
  for (const auto& member : group.members) {
    const auto path = resolve_scenario(member, options.corpus_dir);
    const auto loaded = load_config(path);
    const auto* radio = std::get_if<RadioPlanDocument>(&loaded);
    if (radio == nullptr) {
      throw ConfigError(group.id + ": group member '" + member + "' is not a radio_plan document");
    }
    plan_cells(*radio, rows, infeasible);
    members.push_back(radio->snapshot);
  }
  json config = group.snapshot;
  config["member_configs"] = members;
  return write_radio_manifest(group.id, config, rows, infeasible, options, clock);
}

fs::path resolve_scenario(const std::string& name_or_path, const fs::path& corpus_dir) {
  const fs::path direct(name_or_path);
  if (direct.has_extension() && fs::exists(direct)) return direct;
  const auto candidate = corpus_dir / (name_or_path + ".json");
  if (fs::exists(candidate)) return candidate;
  if (fs::exists(direct) && fs::is_regular_file(direct)) return direct;
  throw ConfigError("unknown scenario '" + name_or_path + "' (not a file and not in " +
                    corpus_dir.string() + ")");
}

RunManifest run_scenario(const std::string& name_or_path, const RunOptions& options) {
  return run_document(load_config(resolve_scenario(name_or_path, options.corpus_dir)), options);
}

std::vector<std::string> list_corpus(const fs::path& corpus_dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(corpus_dir)) return ids;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void write_manifest(const RunManifest& manifest, const fs::path& out_dir) {
  auto out = open_artifact(out_dir / "manifest.json");
  out << manifest.to_json().dump(2) << '\n';
}

}  // namespace platoon

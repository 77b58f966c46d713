#ifndef PLATOON_CONFIG_HPP
#define PLATOON_CONFIG_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/stability.hpp"

namespace platoon {

inline constexpr int kSchemaVersion = 1;

/// Unreadable, malformed or invalid configuration. The message carries the
/// source, the offending field or the violated rule.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// kind "simulation": one platoon run plus its stability verdicts.
struct SimulationDocument {
  std::string id;
  SimulationScenario scenario;
  double settling_tolerance = 1e-3;
  std::optional<FrequencySweepConfig> sweep;  // default: default_sweep()
  nlohmann::json snapshot;
};

/// kind "radio_plan": link budget and handover planning over a grid of
/// carrier frequencies, handover frequencies and rate thresholds.
struct RadioPlanDocument {
  std::string id;
  RadioParams radio;
  double headway = 0.2;
  double standstill = 0.0;
  std::vector<double> carrier_freqs_hz;
  std::vector<double> handover_freqs;
  std::vector<double> rate_thresholds_bps;
  nlohmann::json snapshot;
};

/// Axes of a sweep; every combination of the listed values is one row.
struct SweepGrid {
  std::vector<ControlGains> gains;
  std::vector<double> delays;
  std::vector<int> m_followers;
  std::vector<double> headways;

  std::size_t size() const {
    return gains.size() * delays.size() * m_followers.size() * headways.size();
  }
};

/// kind "sweep": a base simulation and the grid applied on top of it.
struct SweepDocument {
  std::string id;
  SimulationDocument base;
  SweepGrid grid;
  nlohmann::json snapshot;
};

/// kind "group": runs other corpus entries and merges their results.
struct GroupDocument {
  std::string id;
  std::vector<std::string> members;
  nlohmann::json snapshot;
};

using ConfigDocument =
    std::variant<SimulationDocument, RadioPlanDocument, SweepDocument, GroupDocument>;

ConfigDocument load_config(const std::filesystem::path& path);

/// `source` names the document in error messages; `fallback_id` is used when
/// the document has no "id".
ConfigDocument parse_config(const nlohmann::json& document, const std::string& source,
                            const std::string& fallback_id);

std::string document_id(const ConfigDocument& document);

}  // namespace platoon

#endif  // PLATOON_CONFIG_HPP

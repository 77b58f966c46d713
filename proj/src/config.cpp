#include "platoon/config.hpp"

#include <fstream>
#include <sstream>

namespace platoon {
namespace {

using nlohmann::json;

// Field access with the dotted path of the field kept for error messages.
class Reader {
 public:
  Reader(const json& node, std::string path, std::string source)
      : node_(node), path_(std::move(path)), source_(std::move(source)) {
    if (!node_.is_object()) fail(path_.empty() ? "document" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  Reader child(const std::string& key) const { return Reader(required(key), name(key), source_); }

  double number(const std::string& key) const {
    const auto& value = required(key);
    if (!value.is_number()) fail(name(key), "expected a number");
    return value.get<double>();
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const {
    const auto& value = required(key);
    if (!value.is_number_integer()) fail(name(key), "expected an integer");
    return value.get<int>();
  }

  std::string text(const std::string& key) const {
    const auto& value = required(key);
    if (!value.is_string()) fail(name(key), "expected a string");
    return value.get<std::string>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  const json& array(const std::string& key) const {
    const auto& value = required(key);
    if (!value.is_array()) fail(name(key), "expected an array");
    return value;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    const auto& values = array(key);
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!values[k].is_number()) fail(name(key) + "[" + std::to_string(k) + "]", "expected a number");
      out.push_back(values[k].get<double>());
    }
    return out;
  }

  const json& raw(const std::string& key) const { return required(key); }

  const std::string& source() const { return source_; }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(source_ + ": field '" + field + "': " + what);
  }

 private:
  const json& required(const std::string& key) const {
    if (!node_.contains(key)) fail(name(key), "missing required field");
    return node_.at(key);
  }

  const json& node_;
  std::string path_;
  std::string source_;
};

ControlGains read_gains(const Reader& r) {
  return {r.number("k_x"), r.number("k_v"), r.number("k_vo"), r.number("k_xo")};
}

DisturbanceProfile read_disturbance(const Reader& r) {
  const auto kind = r.text("kind");
  if (kind == "none") return DisturbanceProfile::none();
  if (kind == "sinusoid") {
    if (!r.has("window")) return DisturbanceProfile::sinusoid();
    const auto window = r.numbers("window");
    if (window.size() != 2) r.fail(r.name("window"), "expected [t_start, t_end]");
    return DisturbanceProfile::sinusoid(window[0], window[1]);
  }
  if (kind == "piecewise") {
    std::vector<DisturbanceSegment> segments;
    const auto& list = r.array("segments");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Reader seg(list[k], r.name("segments") + "[" + std::to_string(k) + "]", r.source());
      segments.push_back({seg.number("from"), seg.number("to"), seg.number("acceleration")});
    }
    return DisturbanceProfile::piecewise(std::move(segments));
  }
  r.fail(r.name("kind"), "unknown disturbance kind '" + kind + "'");
}

SimulationDocument read_simulation(const Reader& r, const std::string& id) {
  SimulationDocument doc;
  doc.id = r.text("id", id);
  const auto p = r.child("platoon");
  auto& s = doc.scenario;
  s.platoon.m_followers = p.integer("m_followers");
  s.platoon.headway = p.number("headway");
  s.platoon.standstill = p.number("standstill", 0.0);
  s.platoon.target_velocity = p.number("target_velocity");
  s.platoon.delay = p.number("delay");
  s.gains = read_gains(r.child("gains"));
  s.disturbance = r.has("disturbance") ? read_disturbance(r.child("disturbance"))
                                       : DisturbanceProfile::none();
  s.t_end = r.number("t_end", 100.0);
  s.dt = r.number("dt", 0.005);
  s.integrator = integrator_from_string(r.text("integrator", "rk4"));
  doc.settling_tolerance = r.number("settling_tolerance", 1e-3);
  if (r.has("frequency_sweep")) {
    const auto f = r.child("frequency_sweep");
    doc.sweep = FrequencySweepConfig{f.number("w_min", 1e-3), f.number("w_max"),
                                     f.number("step", 1e-3)};
  }
  return doc;
}

void validate_simulation(const SimulationDocument& doc) {
  validate(doc.scenario);
  if (!(doc.settling_tolerance > 0.0)) throw ValidationError("settling_tolerance must be positive");
}

RadioPlanDocument read_radio_plan(const Reader& r, const std::string& id) {
  RadioPlanDocument doc;
  doc.id = r.text("id", id);
  const auto radio = r.child("radio");
  auto& rp = doc.radio;
  rp.n_antennas = radio.integer("n_antennas");
  rp.m_followers = radio.integer("m_followers");
  rp.tx_power_dbm = radio.number("tx_power_dbm");
  rp.bandwidth_hz = radio.number("bandwidth_hz");
  rp.path_loss_exp = radio.number("path_loss_exp");
  rp.perp_distance = radio.number("perp_distance");
  rp.elev_diff = radio.number("elev_diff");
  if (radio.has("noise_power_dbm")) {
    const auto& noise = radio.raw("noise_power_dbm");
    if (noise.is_string()) {
      if (noise.get<std::string>() != "auto") radio.fail(radio.name("noise_power_dbm"), "expected a number or \"auto\"");
    } else if (noise.is_number()) {
      rp.noise_power_dbm = noise.get<double>();
    } else {
      radio.fail(radio.name("noise_power_dbm"), "expected a number or \"auto\"");
    }
  }
  rp.noise_figure_db = radio.number("noise_figure_db", 0.0);
  rp.rate_threshold_bps = radio.number("rate_threshold_bps", rp.rate_threshold_bps);
  rp.carrier_freq_hz = radio.number("carrier_freq_hz", rp.carrier_freq_hz);
  rp.handover_freq = radio.number("handover_freq", rp.handover_freq);

  const auto platoon = r.child("platoon");
  doc.headway = platoon.number("headway");
  if (platoon.has("standstill") == platoon.has("standstill_total")) {
    platoon.fail(platoon.name("standstill"), "give exactly one of standstill or standstill_total");
  }
  doc.standstill = platoon.has("standstill")
                       ? platoon.number("standstill")
                       : platoon.number("standstill_total") / rp.m_followers;

  if (r.has("grid")) {
    const auto grid = r.child("grid");
    if (grid.has("carrier_freq_hz")) doc.carrier_freqs_hz = grid.numbers("carrier_freq_hz");
    if (grid.has("handover_freq") && grid.has("handover_period_s")) {
      grid.fail(grid.name("handover_freq"), "give handover_freq or handover_period_s, not both");
    }
    if (grid.has("handover_freq")) doc.handover_freqs = grid.numbers("handover_freq");
    if (grid.has("handover_period_s")) {
      for (double period : grid.numbers("handover_period_s")) {
        if (!(period > 0.0)) grid.fail(grid.name("handover_period_s"), "periods must be positive");
        doc.handover_freqs.push_back(1.0 / period);
      }
    }
    if (grid.has("rate_threshold_bps")) doc.rate_thresholds_bps = grid.numbers("rate_threshold_bps");
  }
  if (doc.carrier_freqs_hz.empty()) doc.carrier_freqs_hz = {rp.carrier_freq_hz};
  if (doc.handover_freqs.empty()) doc.handover_freqs = {rp.handover_freq};
  if (doc.rate_thresholds_bps.empty()) doc.rate_thresholds_bps = {rp.rate_threshold_bps};
  return doc;
}

void validate_radio_plan(const RadioPlanDocument& doc) {
  for (double fc : doc.carrier_freqs_hz) {
    for (double fh : doc.handover_freqs) {
      for (double rth : doc.rate_thresholds_bps) {
        RadioParams rp = doc.radio;
        rp.carrier_freq_hz = fc;
        rp.handover_freq = fh;
        rp.rate_threshold_bps = rth;
        validate(rp);
      }
    }
  }
  if (!(doc.headway > 0.0) || !(doc.standstill >= 0.0)) {
    throw ValidationError("headway must be positive and standstill distance non-negative");
  }
}

SweepDocument read_sweep(const Reader& r, const std::string& id, const std::string& source) {
  SweepDocument doc;
  doc.id = r.text("id", id);
  doc.base = read_simulation(r.child("base"), doc.id + "/base");
  const auto& s = doc.base.scenario;
  doc.grid.gains = {s.gains};
  doc.grid.delays = {s.platoon.delay};
  doc.grid.m_followers = {s.platoon.m_followers};
  doc.grid.headways = {s.platoon.headway};
  if (r.has("grid")) {
    const auto grid = r.child("grid");
    if (grid.has("gains")) {
      doc.grid.gains.clear();
      const auto& list = grid.array("gains");
      for (std::size_t k = 0; k < list.size(); ++k) {
        doc.grid.gains.push_back(
            read_gains(Reader(list[k], grid.name("gains") + "[" + std::to_string(k) + "]", source)));
      }
    }
    if (grid.has("delay")) doc.grid.delays = grid.numbers("delay");
    if (grid.has("headway")) doc.grid.headways = grid.numbers("headway");
    if (grid.has("m_followers")) {
      doc.grid.m_followers.clear();
      const auto& list = grid.array("m_followers");
      for (std::size_t k = 0; k < list.size(); ++k) {
        if (!list[k].is_number_integer()) {
          grid.fail(grid.name("m_followers") + "[" + std::to_string(k) + "]", "expected an integer");
        }
        doc.grid.m_followers.push_back(list[k].get<int>());
      }
    }
  }
  return doc;
}

GroupDocument read_group(const Reader& r, const std::string& id) {
  GroupDocument doc;
  doc.id = r.text("id", id);
  const auto& list = r.array("members");
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (!list[k].is_string()) r.fail(r.name("members") + "[" + std::to_string(k) + "]", "expected a string");
    doc.members.push_back(list[k].get<std::string>());
  }
  if (doc.members.empty()) r.fail(r.name("members"), "group needs at least one member");
  return doc;
}

}  // namespace

ConfigDocument parse_config(const nlohmann::json& document, const std::string& source,
                            const std::string& fallback_id) {
  const Reader root(document, "", source);
  const int version = root.integer("schema_version");
  if (version != kSchemaVersion) {
    root.fail("schema_version", "unsupported version " + std::to_string(version));
  }
  const auto kind = root.text("kind");
  try {
    if (kind == "simulation") {
      auto doc = read_simulation(root, fallback_id);
      validate_simulation(doc);
      doc.snapshot = document;
      return doc;
    }
    if (kind == "radio_plan") {
      auto doc = read_radio_plan(root, fallback_id);
      validate_radio_plan(doc);
      doc.snapshot = document;
      return doc;
    }
    if (kind == "sweep") {
      auto doc = read_sweep(root, fallback_id, source);
      validate_simulation(doc.base);
      doc.snapshot = document;
      return doc;
    }
    if (kind == "group") {
      auto doc = read_group(root, fallback_id);
      doc.snapshot = document;
      return doc;
    }
  } catch (const ValidationError& e) {
    throw ConfigError(source + ": invalid configuration: " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  root.fail("kind", "unknown document kind '" + kind + "'");
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": parse error: " + e.what());
  }
  return parse_config(document, path.string(), path.stem().string());
}

std::string document_id(const ConfigDocument& document) {
  return std::visit([](const auto& doc) { return doc.id; }, document);
}

}  // namespace platoon

#include "platoon/core_types.hpp"

#include <cmath>
#include <numbers>

namespace platoon {
namespace {

void require(bool condition, const std::string& rule) {
  if (!condition) throw ValidationError(rule);
}

bool positive(double value) { return std::isfinite(value) && value > 0.0; }

}  // namespace

void validate(const ControlGains& gains) {
  require(positive(gains.k_x), "gain k_x must be strictly positive");
  require(positive(gains.k_v), "gain k_v must be strictly positive");
  require(positive(gains.k_vo), "gain k_vo must be strictly positive");
  require(positive(gains.k_xo), "gain k_xo must be strictly positive");
}

LambdaEta derive_lambda_eta(const ControlGains& gains, double headway) {
  validate(gains);
  require(positive(headway), "headway must be strictly positive");
  return {gains.k_x + gains.k_xo, gains.k_x * headway + gains.k_v + gains.k_vo};
}

void validate(const PlatoonConfig& config) {
  require(config.m_followers >= 1, "platoon needs at least one follower (M >= 1)");
  require(positive(config.headway), "headway h must be strictly positive");
  require(std::isfinite(config.standstill) && config.standstill >= 0.0,
          "standstill distance l must be non-negative");
  require(positive(config.target_velocity), "target velocity v_o must be strictly positive");
  require(positive(config.delay), "delay tau must be strictly positive");
  require(config.desired_gap() > 0.0, "desired gap h*v_o + l must be positive");
}

DisturbanceProfile DisturbanceProfile::none() { return {}; }

DisturbanceProfile DisturbanceProfile::sinusoid(double t_start, double t_end) {
  DisturbanceProfile profile;
  profile.kind = Kind::kSinusoid;
  profile.t_start = t_start;
  profile.t_end = t_end;
  validate(profile);
  return profile;
}

DisturbanceProfile DisturbanceProfile::piecewise(std::vector<DisturbanceSegment> segments) {
  DisturbanceProfile profile;
  profile.kind = Kind::kPiecewise;
  if (!segments.empty()) {
    profile.t_start = segments.front().t_from;
    profile.t_end = segments.back().t_to;
  }
  profile.segments = std::move(segments);
  validate(profile);
  return profile;
}

void validate(const DisturbanceProfile& profile) {
  switch (profile.kind) {
    case DisturbanceProfile::Kind::kNone:
      return;
    case DisturbanceProfile::Kind::kSinusoid:
      require(std::isfinite(profile.t_start) && std::isfinite(profile.t_end) &&
                  profile.t_start >= 0.0 && profile.t_end > profile.t_start,
              "disturbance window must satisfy 0 <= t_start < t_end");
      return;
    case DisturbanceProfile::Kind::kPiecewise:
      break;
  }
  require(!profile.segments.empty(), "piecewise disturbance needs at least one segment");
  require(profile.segments.front().t_from == profile.t_start &&
              profile.segments.back().t_to == profile.t_end,
          "piecewise segments must cover the disturbance window");
  require(profile.t_start >= 0.0, "disturbance window must start at t >= 0");
  for (std::size_t k = 0; k < profile.segments.size(); ++k) {
    const auto& seg = profile.segments[k];
    require(std::isfinite(seg.acceleration), "segment acceleration must be finite");
    require(std::isfinite(seg.t_from) && std::isfinite(seg.t_to) && seg.t_to > seg.t_from,
            "segment interval must be non-empty");
    if (k > 0) {
      require(seg.t_from == profile.segments[k - 1].t_to,
              "piecewise segments must be contiguous without overlap");
    }
  }
}

std::string to_string(DisturbanceProfile::Kind kind) {
  switch (kind) {
    case DisturbanceProfile::Kind::kNone: return "none";
    case DisturbanceProfile::Kind::kSinusoid: return "sinusoid";
    case DisturbanceProfile::Kind::kPiecewise: return "piecewise";
  }
  return "none";
}

DisturbanceProfile::Kind disturbance_kind_from_string(const std::string& name) {
  if (name == "none") return DisturbanceProfile::Kind::kNone;
  if (name == "sinusoid") return DisturbanceProfile::Kind::kSinusoid;
  if (name == "piecewise") return DisturbanceProfile::Kind::kPiecewise;
  throw ValidationError("unknown disturbance kind '" + name + "'");
}

double RadioParams::beta() const {
  const double ratio = kSpeedOfLight / (4.0 * std::numbers::pi * carrier_freq_hz);
  return ratio * ratio;
}

double RadioParams::noise_power_w() const {
  const double floor_dbm =
      noise_power_dbm.value_or(-174.0 + 10.0 * std::log10(bandwidth_hz));
  return dbm_to_watts(floor_dbm + noise_figure_db);
}

double RadioParams::tx_power_w() const { return dbm_to_watts(tx_power_dbm); }

void validate(const RadioParams& params) {
  require(params.m_followers >= 1, "radio model needs at least one follower (M >= 1)");
  require(params.n_antennas > params.m_followers + 1,
          "insufficient antennas for ZF: need N > M + 1");
  require(std::isfinite(params.tx_power_dbm), "transmit power must be finite");
  require(positive(params.bandwidth_hz), "bandwidth must be positive");
  require(positive(params.carrier_freq_hz), "carrier frequency must be positive");
  require(positive(params.path_loss_exp), "path loss exponent must be positive");
  require(std::isfinite(params.perp_distance) && params.perp_distance >= 0.0,
          "perpendicular distance r_o must be non-negative");
  require(std::isfinite(params.elev_diff) && params.elev_diff >= 0.0,
          "elevation difference h_o must be non-negative");
  require(!params.noise_power_dbm || std::isfinite(*params.noise_power_dbm),
          "noise power must be finite");
  require(std::isfinite(params.noise_figure_db), "noise figure must be finite");
  require(positive(params.rate_threshold_bps), "rate threshold must be positive");
  require(positive(params.handover_freq), "handover frequency must be positive");
}

double dbm_to_watts(double p_dbm) { return std::pow(10.0, (p_dbm - 30.0) / 10.0); }

double watts_to_dbm(double p_w) { return 10.0 * std::log10(p_w) + 30.0; }

}  // namespace platoon

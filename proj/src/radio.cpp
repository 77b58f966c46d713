#include "platoon/radio.hpp"

#include <cmath>
#include <numbers>

#include "platoon/csv.hpp"

namespace platoon {
namespace {

// log of P (N - M - 1) beta / sigma^2
double log_link_gain(const RadioParams& p) {
  return std::log(p.tx_power_w()) + std::log(static_cast<double>(p.n_antennas - p.m_followers - 1)) +
         std::log(p.beta()) - std::log(p.noise_power_w());
}

void check_geometry(int m_followers, double headway, double standstill, const RadioParams& p) {
  if (m_followers != p.m_followers) {
    throw ValidationError("platoon size M must match the radio model's M");
  }
  if (!(headway > 0.0) || !(standstill >= 0.0)) {
    throw ValidationError("headway must be positive and standstill distance non-negative");
  }
}

}  // namespace

double achievable_rate(const RadioParams& params, double distance) {
  validate(params);
  if (!(distance > 0.0)) throw ValidationError("distance must be positive");
  const double snr = std::exp(log_link_gain(params) - params.path_loss_exp * std::log(distance));
  return params.bandwidth_hz * std::log2(1.0 + snr);
}

double coverage_radius(const RadioParams& params) {
  validate(params);
  const double snr_threshold =
      std::expm1(params.rate_threshold_bps / params.bandwidth_hz * std::numbers::ln2);
  return std::exp((log_link_gain(params) - std::log(snr_threshold)) / params.path_loss_exp);
}

CoverageResult longitudinal_range(const RadioParams& params) {
  CoverageResult result;
  result.d_th = coverage_radius(params);
  const double chord_sq = result.d_th * result.d_th - params.perp_distance * params.perp_distance -
                          params.elev_diff * params.elev_diff;
  result.feasible = chord_sq > 0.0;
  result.ell_th = result.feasible ? std::sqrt(chord_sq) : 0.0;
  return result;
}

double platoon_length(const PlatoonConfig& platoon) {
  return platoon.m_followers * platoon.headway * platoon.target_velocity +
         platoon.m_followers * platoon.standstill;
}

double stay_time(const PlatoonConfig& platoon, const CoverageResult& coverage) {
  if (!coverage.feasible) throw InfeasibleError("RSU coverage does not reach the lane");
  if (!(platoon.target_velocity > 0.0)) throw ValidationError("target velocity must be positive");
  const double slack = 2.0 * coverage.ell_th - platoon_length(platoon);
  if (!(slack > 0.0)) throw InfeasibleError("platoon does not fit coverage");
  return slack / platoon.target_velocity;
}

double max_platoon_velocity(int m_followers, double headway, double standstill,
                            const RadioParams& params) {
  check_geometry(m_followers, headway, standstill, params);
  const auto coverage = longitudinal_range(params);
  if (!coverage.feasible) throw InfeasibleError("RSU coverage does not reach the lane");
  const double velocity = (2.0 * coverage.ell_th - m_followers * standstill) /
                          (m_followers * headway + 1.0 / params.handover_freq);
  if (!(velocity > 0.0)) throw InfeasibleError("no feasible velocity");
  return velocity;
}

double max_isld(const PlatoonConfig& platoon, const RadioParams& params) {
  validate(platoon);
  check_geometry(platoon.m_followers, platoon.headway, platoon.standstill, params);
  const auto coverage = longitudinal_range(params);
  if (!coverage.feasible) throw InfeasibleError("RSU coverage does not reach the lane");
  const double isld = 2.0 * coverage.ell_th - platoon_length(platoon);
  if (isld < 0.0) throw InfeasibleError("platoon exceeds dual-connectivity span");
  return isld;
}

PlannerRow plan(int m_followers, double headway, double standstill, const RadioParams& params) {
  PlannerRow row;
  row.carrier_freq_hz = params.carrier_freq_hz;
  row.rate_threshold_bps = params.rate_threshold_bps;
  row.handover_freq = params.handover_freq;
  const auto coverage = longitudinal_range(params);
  row.d_th = coverage.d_th;
  row.ell_th = coverage.ell_th;
  row.v_max = max_platoon_velocity(m_followers, headway, standstill, params);
  const PlatoonConfig platoon{m_followers, headway, standstill, row.v_max, 1.0};
  row.platoon_length = platoon_length(platoon);
  row.stay_time = stay_time(platoon, coverage);
  row.isld_max = max_isld(platoon, params);
  return row;
}

void write_planner_csv(std::ostream& out, const std::vector<PlannerRow>& rows) {
  csv::write_row(out, {"fc", "Rth", "f_handover", "d_th", "ell_th", "D_platoon", "v_max",
                       "T_stay", "isld_max"});
  for (const auto& r : rows) {
    csv::write_row(out, {csv::format(r.carrier_freq_hz), csv::format(r.rate_threshold_bps),
                         csv::format(r.handover_freq), csv::format(r.d_th), csv::format(r.ell_th),
                         csv::format(r.platoon_length), csv::format(r.v_max),
                         csv::format(r.stay_time), csv::format(r.isld_max)});
  }
}

}  // namespace platoon

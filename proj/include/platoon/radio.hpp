#ifndef PLATOON_RADIO_HPP
#define PLATOON_RADIO_HPP

#include <ostream>
#include <vector>

#include "platoon/core_types.hpp"

namespace platoon {

/// RSU coverage along the lane. ell_th is the half-length of the chord the
/// coverage disc cuts out of the lane; it is 0 when the disc misses the lane.
struct CoverageResult {
  double d_th = 0.0;
  double ell_th = 0.0;
  bool feasible = false;
};

/// ZF uplink rate B log2(1 + P (N - M - 1) beta d^-alpha / sigma^2), bps.
double achievable_rate(const RadioParams& params, double distance);

/// Distance at which the rate drops to the threshold. Evaluated in log space.
double coverage_radius(const RadioParams& params);

CoverageResult longitudinal_range(const RadioParams& params);

/// M h v_o + M l.
double platoon_length(const PlatoonConfig& platoon);

/// Time the platoon stays inside one RSU before the leader leaves coverage.
/// Throws InfeasibleError when coverage is infeasible or the platoon does not
/// fit the coverage chord.
double stay_time(const PlatoonConfig& platoon, const CoverageResult& coverage);

/// Largest platoon velocity whose stay time still respects the handover
/// frequency: (2 ell_th - M l) / (M h + 1/f_handover). Throws InfeasibleError
/// when coverage is infeasible or no positive velocity exists.
double max_platoon_velocity(int m_followers, double headway, double standstill,
                            const RadioParams& params);

/// Largest inter-site longitudinal distance that keeps the whole platoon in
/// dual-connectivity range during handover: 2 ell_th - D_platoon.
double max_isld(const PlatoonConfig& platoon, const RadioParams& params);

/// One Table-I-style planner row. D_platoon, T_stay and the ISLD are
/// evaluated at the planned velocity.
struct PlannerRow {
  double carrier_freq_hz = 0.0;
  double rate_threshold_bps = 0.0;
  double handover_freq = 0.0;
  double d_th = 0.0;
  double ell_th = 0.0;
  double platoon_length = 0.0;
  double v_max = 0.0;
  double stay_time = 0.0;
  double isld_max = 0.0;
};

/// Plans at v_max. Throws InfeasibleError as the underlying operations do.
PlannerRow plan(int m_followers, double headway, double standstill, const RadioParams& params);

/// CSV "fc,Rth,f_handover,d_th,ell_th,D_platoon,v_max,T_stay,isld_max".
void write_planner_csv(std::ostream& out, const std::vector<PlannerRow>& rows);

}  // namespace platoon

#endif  // PLATOON_RADIO_HPP

#ifndef PLATOON_CORE_TYPES_HPP
#define PLATOON_CORE_TYPES_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace platoon {

// Every quantity below is SI (m, s, W, Hz) unless the field name says dBm/dB.

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

/// Raised when a value object or operation input breaks a domain invariant.
/// The message names the violated rule.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a requested quantity does not exist for the given inputs
/// (no feasible headway, coverage cannot reach the lane, ...). Callers that
/// report verdicts treat this as "infeasible" rather than as a failure.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative numerical routine fails to meet its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The four feedback gains of the RSU control law. All strictly positive.
struct ControlGains {
  double k_x = 0.0;   // predecessor spacing, 1/s^2
  double k_v = 0.0;   // predecessor relative velocity, 1/s
  double k_vo = 0.0;  // target velocity tracking, 1/s
  double k_xo = 0.0;  // leader-relative spacing, 1/s^2
};

void validate(const ControlGains& gains);

/// Aggregated gains of the closed-loop characteristic function.
struct LambdaEta {
  double lambda = 0.0;  // k_x + k_xo
  double eta = 0.0;     // k_x*h + k_v + k_vo
};

LambdaEta derive_lambda_eta(const ControlGains& gains, double headway);

struct PlatoonConfig {
  int m_followers = 1;
  double headway = 0.2;          // h, s
  double standstill = 0.0;       // l, m
  double target_velocity = 20.0; // v_o, m/s
  double delay = 0.1;            // tau, s

  double desired_gap() const { return headway * target_velocity + standstill; }
};

void validate(const PlatoonConfig& config);

/// Leader acceleration profile. Piecewise segments are closed intervals
/// evaluated in order; the first segment containing t wins, so a shared
/// endpoint belongs to the earlier segment.
struct DisturbanceSegment {
  double t_from = 0.0;
  double t_to = 0.0;
  double acceleration = 0.0;  // m/s^2
};

struct DisturbanceProfile {
  enum class Kind { kNone, kSinusoid, kPiecewise };

  Kind kind = Kind::kNone;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<DisturbanceSegment> segments;

  static DisturbanceProfile none();
  /// -sin(t) on [t_start, t_end].
  static DisturbanceProfile sinusoid(double t_start = 10.0, double t_end = 30.0);
  static DisturbanceProfile piecewise(std::vector<DisturbanceSegment> segments);
};

void validate(const DisturbanceProfile& profile);

std::string to_string(DisturbanceProfile::Kind kind);
DisturbanceProfile::Kind disturbance_kind_from_string(const std::string& name);

/// Sampled platoon motion. Vehicle 0 is the leader. `u` and `e` hold
/// followers only: u[i-1] and e[i-1] belong to follower i.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> e;
  bool diverged = false;  // true when integration was cut at a non-finite state

  int followers() const { return static_cast<int>(e.size()); }
  std::size_t samples() const { return times.size(); }
};

struct RadioParams {
  int n_antennas = 64;
  int m_followers = 9;
  double tx_power_dbm = 20.0;
  double bandwidth_hz = 5.0e6;
  double carrier_freq_hz = 3.5e9;
  double path_loss_exp = 2.0;
  double perp_distance = 10.0;  // r_o, m
  double elev_diff = 6.0;       // h_o, m
  // Unset means the thermal floor -174 + 10 log10(B) dBm.
  std::optional<double> noise_power_dbm;
  // Extra receiver loss added to the noise power; calibration knob.
  double noise_figure_db = 0.0;
  double rate_threshold_bps = 75.0e6;
  double handover_freq = 1.0 / 30.0;  // 1/s

  /// (c / (4 pi f_c))^2
  double beta() const;
  double noise_power_w() const;
  double tx_power_w() const;
};

void validate(const RadioParams& params);

struct StabilityVerdict {
  bool stable = false;
  double margin = 0.0;
  std::optional<double> witness;
};

double dbm_to_watts(double p_dbm);
double watts_to_dbm(double p_w);

}  // namespace platoon

#endif  // PLATOON_CORE_TYPES_HPP

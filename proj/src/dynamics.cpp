#include "platoon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "platoon/csv.hpp"

namespace platoon {
namespace {

constexpr double kGridTolerance = 1e-9;

// Step index for a time that must sit on the grid.
long grid_index(double t, double dt) {
  const double ratio = t / dt;
  const long n = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > kGridTolerance * std::max(1.0, std::abs(ratio))) {
    throw std::logic_error("time " + std::to_string(t) + " is not on the simulation grid");
  }
  return n;
}

bool all_finite(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

struct State {
  std::vector<double> x;
  std::vector<double> v;
};

// Which one-sided limit of the leader profile a stage uses. Stages on a step
// boundary take the value from inside the step, so a window edge that falls
// on the grid does not leak into the neighbouring step.
enum class Side { kAfter, kInterior, kBefore };

bool covers(double t, double from, double to, Side side) {
  switch (side) {
    case Side::kAfter: return t >= from && t < to;
    case Side::kBefore: return t > from && t <= to;
    case Side::kInterior: break;
  }
  return t >= from && t <= to;
}

double stage_leader_acceleration(const DisturbanceProfile& profile, double t, Side side) {
  switch (profile.kind) {
    case DisturbanceProfile::Kind::kNone:
      return 0.0;
    case DisturbanceProfile::Kind::kSinusoid:
      return covers(t, profile.t_start, profile.t_end, side) ? -std::sin(t) : 0.0;
    case DisturbanceProfile::Kind::kPiecewise:
      for (const auto& seg : profile.segments) {
        if (covers(t, seg.t_from, seg.t_to, side)) return seg.acceleration;
      }
      return 0.0;
  }
  return 0.0;
}

// Accelerations for every vehicle at time t. Followers are held at the
// inputs computed from the delayed grid state at the start of the step.
void accelerations(const DisturbanceProfile& profile, double t, Side side,
                   const std::vector<double>& follower_inputs, std::vector<double>& out) {
  out[0] = stage_leader_acceleration(profile, t, side);
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = follower_inputs[i - 1];
}

void euler_step(const DisturbanceProfile& profile, double t, double dt,
                const std::vector<double>& inputs, State& state) {
  std::vector<double> a(state.x.size());
  accelerations(profile, t, Side::kAfter, inputs, a);
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    state.x[i] += dt * state.v[i];
    state.v[i] += dt * a[i];
  }
}

// The step spans [t, t_next]; t_next comes from the grid index so the end
// stage lands exactly on grid-aligned window edges.
void rk4_step(const DisturbanceProfile& profile, double t, double t_next, double dt,
              const std::vector<double>& inputs, State& state) {
  const std::size_t n = state.x.size();
  std::vector<double> a1(n), a2(n), a3(n), a4(n);
  accelerations(profile, t, Side::kAfter, inputs, a1);
  accelerations(profile, 0.5 * (t + t_next), Side::kInterior, inputs, a2);
  a3 = a2;  // stage acceleration depends on time only
  accelerations(profile, t_next, Side::kBefore, inputs, a4);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = state.v[i];
    const double v2 = v + 0.5 * dt * a1[i];
    const double v3 = v + 0.5 * dt * a2[i];
    const double v4 = v + dt * a3[i];
    state.x[i] += dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
    state.v[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
  }
}

}  // namespace

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kEuler ? "euler" : "rk4";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "euler") return Integrator::kEuler;
  if (name == "rk4") return Integrator::kRk4;
  throw ValidationError("unknown integrator '" + name + "' (expected euler or rk4)");
}

long SimulationScenario::delay_steps() const { return std::lround(platoon.delay / dt); }

long SimulationScenario::total_steps() const {
  return static_cast<long>(std::floor(t_end / dt + kGridTolerance));
}

void validate(const SimulationScenario& scenario) {
  validate(scenario.platoon);
  validate(scenario.gains);
  validate(scenario.disturbance);
  if (!(std::isfinite(scenario.dt) && scenario.dt > 0.0 && scenario.dt <= 0.05)) {
    throw ValidationError("time step dt must lie in (0, 0.05] s");
  }
  const double ratio = scenario.platoon.delay / scenario.dt;
  const long steps = std::lround(ratio);
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > kGridTolerance * ratio) {
    throw ValidationError("delay not an integer multiple of dt");
  }
  if (!std::isfinite(scenario.t_end) || scenario.t_end <= 0.0) {
    throw ValidationError("t_end must be positive");
  }
  if (scenario.disturbance.kind != DisturbanceProfile::Kind::kNone &&
      scenario.t_end <= scenario.disturbance.t_end) {
    throw ValidationError("t_end must exceed the end of the disturbance window");
  }
}

double spacing_error(double x_i, double x_prev, double h, double v_o, double l) {
  return x_i - x_prev + h * v_o + l;
}

HistoryBuffer::HistoryBuffer(const PlatoonConfig& platoon, double dt, std::size_t capacity)
    : vehicles_(platoon.m_followers + 1),
      capacity_(capacity),
      dt_(dt),
      target_velocity_(platoon.target_velocity),
      x_(capacity * static_cast<std::size_t>(vehicles_)),
      v_(capacity * static_cast<std::size_t>(vehicles_)),
      initial_x_(static_cast<std::size_t>(vehicles_)),
      pre_x_(static_cast<std::size_t>(vehicles_)),
      pre_v_(static_cast<std::size_t>(vehicles_), platoon.target_velocity) {
  if (capacity == 0) throw std::invalid_argument("history capacity must be positive");
  for (int i = 0; i < vehicles_; ++i) initial_x_[i] = -i * platoon.desired_gap();
}

void HistoryBuffer::push(std::span<const double> x, std::span<const double> v) {
  const auto n = static_cast<std::size_t>(vehicles_);
  if (x.size() != n || v.size() != n) {
    throw std::invalid_argument("history sample has the wrong vehicle count");
  }
  const std::size_t slot = static_cast<std::size_t>(next_step_) % capacity_;
  std::copy(x.begin(), x.end(), x_.begin() + slot * n);
  std::copy(v.begin(), v.end(), v_.begin() + slot * n);
  ++next_step_;
}

HistoryBuffer::Sample HistoryBuffer::at(long step) const {
  const auto n = static_cast<std::size_t>(vehicles_);
  if (step < 0) {
    const double t = static_cast<double>(step) * dt_;
    for (std::size_t i = 0; i < n; ++i) pre_x_[i] = initial_x_[i] + target_velocity_ * t;
    return {pre_x_, pre_v_};
  }
  if (step >= next_step_) {
    throw std::logic_error("history query for step " + std::to_string(step) +
                           " beyond newest stored step");
  }
  if (next_step_ - step > static_cast<long>(capacity_)) {
    throw std::logic_error("history underflow: step " + std::to_string(step) +
                           " no longer retained");
  }
  const std::size_t slot = static_cast<std::size_t>(step) % capacity_;
  return {std::span<const double>(x_).subspan(slot * n, n),
          std::span<const double>(v_).subspan(slot * n, n)};
}

double control_input(const HistoryBuffer& history, int i, double t,
                     const SimulationScenario& scenario) {
  const auto& p = scenario.platoon;
  const auto& g = scenario.gains;
  if (i < 1 || i > p.m_followers) {
    throw std::out_of_range("follower index " + std::to_string(i) + " outside [1, M]");
  }
  const long step = grid_index(t, scenario.dt) - scenario.delay_steps();
  const auto [x, v] = history.at(step);
  const double h = p.headway;
  const double l = p.standstill;
  return -g.k_x * (x[i] - x[i - 1] + h * v[i] + l)
         - g.k_v * (v[i] - v[i - 1])
         - g.k_vo * (v[i] - p.target_velocity)
         - g.k_xo * (x[i] - x[0] + i * h * p.target_velocity + i * l);
}

double leader_acceleration(const DisturbanceProfile& profile, double t) {
  switch (profile.kind) {
    case DisturbanceProfile::Kind::kNone:
      return 0.0;
    case DisturbanceProfile::Kind::kSinusoid:
      return (t >= profile.t_start && t <= profile.t_end) ? -std::sin(t) : 0.0;
    case DisturbanceProfile::Kind::kPiecewise:
      for (const auto& seg : profile.segments) {
        if (t >= seg.t_from && t <= seg.t_to) return seg.acceleration;
      }
      return 0.0;
  }
  return 0.0;
}

Trajectory simulate(const SimulationScenario& scenario) {
  validate(scenario);
  const auto& p = scenario.platoon;
  const int m = p.m_followers;
  const auto vehicles = static_cast<std::size_t>(m + 1);
  const long delay = scenario.delay_steps();
  const long steps = scenario.total_steps();
  const double dt = scenario.dt;

  Trajectory traj;
  traj.dt = dt;
  traj.x.assign(vehicles, {});
  traj.v.assign(vehicles, {});
  traj.u.assign(static_cast<std::size_t>(m), {});
  traj.e.assign(static_cast<std::size_t>(m), {});
  const auto reserve = static_cast<std::size_t>(steps + 1);
  traj.times.reserve(reserve);
  for (auto* series : {&traj.x, &traj.v}) {
    for (auto& s : *series) s.reserve(reserve);
  }
  for (auto* series : {&traj.u, &traj.e}) {
    for (auto& s : *series) s.reserve(reserve);
  }

  State state{std::vector<double>(vehicles), std::vector<double>(vehicles, p.target_velocity)};
  for (std::size_t i = 0; i < vehicles; ++i) state.x[i] = -static_cast<double>(i) * p.desired_gap();

  HistoryBuffer history(p, dt, static_cast<std::size_t>(delay + 1));
  std::vector<double> inputs(static_cast<std::size_t>(m));

  auto record = [&](long n) {
    const double t = static_cast<double>(n) * dt;
    traj.times.push_back(t);
    for (std::size_t i = 0; i < vehicles; ++i) {
      traj.x[i].push_back(state.x[i]);
      traj.v[i].push_back(state.v[i]);
    }
    for (int i = 1; i <= m; ++i) {
      inputs[i - 1] = control_input(history, i, t, scenario);
      traj.u[i - 1].push_back(inputs[i - 1]);
      traj.e[i - 1].push_back(
          spacing_error(state.x[i], state.x[i - 1], p.headway, p.target_velocity, p.standstill));
    }
  };

  history.push(state.x, state.v);
  record(0);
  for (long n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    State next = state;
    if (scenario.integrator == Integrator::kEuler) {
      euler_step(scenario.disturbance, t, dt, inputs, next);
    } else {
      rk4_step(scenario.disturbance, t, static_cast<double>(n + 1) * dt, dt, inputs, next);
    }
    if (!all_finite(next.x) || !all_finite(next.v) || !all_finite(inputs)) {
      traj.diverged = true;
      break;
    }
    state = std::move(next);
    history.push(state.x, state.v);
    record(n + 1);
  }
  return traj;
}

std::vector<double> peak_spacing_errors(const Trajectory& trajectory) {
  std::vector<double> peaks;
  peaks.reserve(trajectory.e.size());
  for (const auto& series : trajectory.e) {
    double peak = 0.0;
    for (double value : series) peak = std::max(peak, std::abs(value));
    peaks.push_back(peak);
  }
  return peaks;
}

std::optional<double> settling_time(const Trajectory& trajectory, double tol) {
  if (!(tol > 0.0)) throw ValidationError("settling tolerance must be positive");
  if (trajectory.diverged || trajectory.times.empty()) return std::nullopt;
  const std::size_t samples = trajectory.times.size();
  std::optional<std::size_t> last_violation;
  for (std::size_t n = samples; n-- > 0;) {
    const bool outside = std::any_of(trajectory.e.begin(), trajectory.e.end(),
                                     [&](const auto& s) { return !(std::abs(s[n]) < tol); });
    if (outside) {
      last_violation = n;
      break;
    }
  }
  if (!last_violation) return trajectory.times.front();
  if (*last_violation + 1 >= samples) return std::nullopt;
  return trajectory.times[*last_violation + 1];
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t vehicles = trajectory.x.size();
  const std::size_t followers = trajectory.e.size();
  std::vector<std::string> row;
  row.reserve(1 + 2 * vehicles + 2 * followers);
  row.emplace_back("t");
  for (std::size_t i = 0; i < vehicles; ++i) row.push_back("x_" + std::to_string(i));
  for (std::size_t i = 0; i < vehicles; ++i) row.push_back("v_" + std::to_string(i));
  for (std::size_t i = 1; i <= followers; ++i) row.push_back("u_" + std::to_string(i));
  for (std::size_t i = 1; i <= followers; ++i) row.push_back("e_" + std::to_string(i));
  csv::write_row(out, row);
  for (std::size_t n = 0; n < trajectory.times.size(); ++n) {
    row.clear();
    row.push_back(csv::format(trajectory.times[n]));
    for (const auto& s : trajectory.x) row.push_back(csv::format(s[n]));
    for (const auto& s : trajectory.v) row.push_back(csv::format(s[n]));
    for (const auto& s : trajectory.u) row.push_back(csv::format(s[n]));
    for (const auto& s : trajectory.e) row.push_back(csv::format(s[n]));
    csv::write_row(out, row);
  }
}

}  // namespace platoon

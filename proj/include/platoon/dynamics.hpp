#ifndef PLATOON_DYNAMICS_HPP
#define PLATOON_DYNAMICS_HPP

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "platoon/core_types.hpp"

namespace platoon {

enum class Integrator { kEuler, kRk4 };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct SimulationScenario {
  PlatoonConfig platoon;
  ControlGains gains;
  DisturbanceProfile disturbance;
  double t_end = 100.0;
  double dt = 0.005;
  Integrator integrator = Integrator::kRk4;

  /// Number of grid steps spanned by the delay. Valid after validate().
  long delay_steps() const;
  long total_steps() const;
};

/// Checks the platoon/gain invariants plus: dt in (0, 0.05], tau an integer
/// multiple of dt, t_end past the end of the disturbance window.
void validate(const SimulationScenario& scenario);

/// Gap deviation of vehicle i from its predecessor: x_i - x_prev + h*v_o + l.
double spacing_error(double x_i, double x_prev, double h, double v_o, double l);

/// Rolling store of the last `capacity` grid samples of every vehicle's
/// position and velocity. Queries for negative step indices return the
/// steady pre-history: all vehicles at v_o with zero spacing error and the
/// leader at x = 0 when t = 0.
class HistoryBuffer {
 public:
  struct Sample {
    std::span<const double> x;
    std::span<const double> v;
  };

  HistoryBuffer(const PlatoonConfig& platoon, double dt, std::size_t capacity);

  /// Appends the sample for the next grid step (step 0 first).
  void push(std::span<const double> x, std::span<const double> v);

  /// State at grid step n. Throws std::logic_error when n is newer than the
  /// last pushed step or older than the retained window.
  Sample at(long step) const;

  long newest_step() const { return next_step_ - 1; }
  int vehicles() const { return vehicles_; }

 private:
  int vehicles_;
  std::size_t capacity_;
  long next_step_ = 0;
  double dt_;
  double target_velocity_;
  std::vector<double> x_;
  std::vector<double> v_;
  std::vector<double> initial_x_;
  mutable std::vector<double> pre_x_;
  mutable std::vector<double> pre_v_;
};

/// RSU control law for follower i at time t (on the grid), using the
/// delayed state at t - tau. The K_x term uses h * v_i(t - tau) as written
/// in the law, not h * v_o.
double control_input(const HistoryBuffer& history, int i, double t,
                     const SimulationScenario& scenario);

double leader_acceleration(const DisturbanceProfile& profile, double t);

/// Fixed-step integration of the closed loop. RK4 stages reuse the delayed
/// state sampled at the start of the step, so follower inputs are held
/// constant across a step while the leader's acceleration is evaluated at
/// every stage time (stages on a step edge use the profile value from inside
/// the step). A non-finite state truncates the trajectory at the last
/// finite sample and sets Trajectory::diverged.
Trajectory simulate(const SimulationScenario& scenario);

/// max_t |e_i(t)| per follower, index i-1 for follower i.
std::vector<double> peak_spacing_errors(const Trajectory& trajectory);

/// Earliest grid time after which every |e_i| stays below tol. Empty when the
/// final sample is still out of tolerance or the run diverged.
std::optional<double> settling_time(const Trajectory& trajectory, double tol);

/// CSV with header t,x_0..x_M,v_0..v_M,u_1..u_M,e_1..e_M.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace platoon

#endif  // PLATOON_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "platoon/dynamics.hpp"
#include "platoon/stability.hpp"

using namespace platoon;

namespace {

const ControlGains kRowA{0.273, 0.75, 0.75, 0.281};
const ControlGains kRowC{0.249, 0.75, 0.75, 0.228};
const ControlGains kUnstable{0.5, 0.1, 0.2, 0.1};

SimulationScenario make(const ControlGains& gains, double tau, int m,
                        DisturbanceProfile disturbance = DisturbanceProfile::sinusoid()) {
  SimulationScenario s;
  s.platoon = {m, 0.2, 1.667, 20.0, tau};
  s.gains = gains;
  s.disturbance = std::move(disturbance);
  return s;
}

DisturbanceProfile three_segment() {
  return DisturbanceProfile::piecewise({{10, 13, 1}, {13, 17, 0}, {17, 20, -1}});
}

DisturbanceProfile two_segment() { return DisturbanceProfile::piecewise({{10, 15, 1}, {15, 20, -1}}); }

double window_peak(const Trajectory& traj, int follower, double from, double to) {
  double peak = 0.0;
  for (std::size_t n = 0; n < traj.samples(); ++n) {
    if (traj.times[n] >= from && traj.times[n] <= to) {
      peak = std::max(peak, std::abs(traj.e[follower - 1][n]));
    }
  }
  return peak;
}

// Brute-force reference integrators. Full state history, no ring buffer,
// the control law written out again from scratch.
struct Reference {
  std::vector<std::vector<double>> x, v, u;  // [step][vehicle]
};

double reference_law(const SimulationScenario& s, const std::vector<double>& x,
                     const std::vector<double>& v, int i) {
  const auto& g = s.gains;
  const auto& p = s.platoon;
  const double gap_term = x[i] - x[i - 1] + p.headway * v[i] + p.standstill;
  const double leader_term =
      x[i] - x[0] + i * (p.headway * p.target_velocity + p.standstill);
  return -g.k_x * gap_term - g.k_v * (v[i] - v[i - 1]) - g.k_vo * (v[i] - p.target_velocity) -
         g.k_xo * leader_term;
}

void delayed_state(const SimulationScenario& s, const Reference& ref, long n,
                   std::vector<double>& x, std::vector<double>& v) {
  const auto& p = s.platoon;
  const double gap = p.headway * p.target_velocity + p.standstill;
  for (int i = 0; i <= p.m_followers; ++i) {
    if (n >= 0) {
      x[i] = ref.x[n][i];
      v[i] = ref.v[n][i];
    } else {
      x[i] = -i * gap + p.target_velocity * n * s.dt;
      v[i] = p.target_velocity;
    }
  }
}

// Euler with the leader acceleration taken from the right at each step start.
Reference reference_euler(const SimulationScenario& s) {
  const int m = s.platoon.m_followers;
  const long k = std::lround(s.platoon.delay / s.dt);
  const long steps = std::lround(s.t_end / s.dt);
  const double gap = s.platoon.headway * s.platoon.target_velocity + s.platoon.standstill;
  Reference ref;
  std::vector<double> x0(m + 1), v0(m + 1, s.platoon.target_velocity);
  for (int i = 0; i <= m; ++i) x0[i] = -i * gap;
  ref.x.push_back(x0);
  ref.v.push_back(v0);
  std::vector<double> xd(m + 1), vd(m + 1);
  for (long n = 0; n <= steps; ++n) {
    const double t = n * s.dt;
    delayed_state(s, ref, n - k, xd, vd);
    std::vector<double> u(m);
    for (int i = 1; i <= m; ++i) u[i - 1] = reference_law(s, xd, vd, i);
    ref.u.push_back(u);
    if (n == steps) break;
    double a0 = 0.0;
    for (const auto& seg : s.disturbance.segments) {
      if (t >= seg.t_from && t < seg.t_to) {
        a0 = seg.acceleration;
        break;
      }
    }
    std::vector<double> x = ref.x[n], v = ref.v[n];
    x[0] += s.dt * v[0];
    v[0] += s.dt * a0;
    for (int i = 1; i <= m; ++i) {
      x[i] += s.dt * v[i];
      v[i] += s.dt * u[i - 1];
    }
    ref.x.push_back(x);
    ref.v.push_back(v);
  }
  return ref;
}

// Followers advanced exactly under the held input; leader in closed form for
// the -sin(t) window [10, 30].
Reference reference_exact_hold(const SimulationScenario& s) {
  const int m = s.platoon.m_followers;
  const double vo = s.platoon.target_velocity;
  const long k = std::lround(s.platoon.delay / s.dt);
  const long steps = std::lround(s.t_end / s.dt);
  const double gap = s.platoon.headway * vo + s.platoon.standstill;
  auto leader_v = [&](double t) {
    if (t < 10.0) return vo;
    return vo + std::cos(std::min(t, 30.0)) - std::cos(10.0);
  };
  auto leader_x = [&](double t) {
    if (t < 10.0) return vo * t;
    const double tc = std::min(t, 30.0);
    const double inside = vo * tc + std::sin(tc) - std::sin(10.0) - std::cos(10.0) * (tc - 10.0);
    return inside + leader_v(30.0) * std::max(0.0, t - 30.0);
  };
  Reference ref;
  std::vector<double> x0(m + 1), v0(m + 1, vo);
  for (int i = 0; i <= m; ++i) x0[i] = -i * gap;
  ref.x.push_back(x0);
  ref.v.push_back(v0);
  std::vector<double> xd(m + 1), vd(m + 1);
  for (long n = 0; n <= steps; ++n) {
    delayed_state(s, ref, n - k, xd, vd);
    std::vector<double> u(m);
    for (int i = 1; i <= m; ++i) u[i - 1] = reference_law(s, xd, vd, i);
    ref.u.push_back(u);
    if (n == steps) break;
    const double t1 = (n + 1) * s.dt;
    std::vector<double> x = ref.x[n], v = ref.v[n];
    x[0] = leader_x(t1);
    v[0] = leader_v(t1);
    for (int i = 1; i <= m; ++i) {
      x[i] += s.dt * v[i] + 0.5 * s.dt * s.dt * u[i - 1];
      v[i] += s.dt * u[i - 1];
    }
    ref.x.push_back(x);
    ref.v.push_back(v);
  }
  return ref;
}

}  // namespace

TEST(SpacingError, Examples) {
  EXPECT_NEAR(spacing_error(-5.667, 0.0, 0.2, 20.0, 1.667), 0.0, 1e-12);
  EXPECT_NEAR(spacing_error(-5.0, 0.0, 0.2, 20.0, 1.667), 0.667, 1e-12);
  EXPECT_NEAR(spacing_error(-6.667, 0.0, 0.2, 20.0, 1.667), -1.0, 1e-12);
}

TEST(LeaderAcceleration, Profiles) {
  const auto sin = DisturbanceProfile::sinusoid();
  EXPECT_EQ(leader_acceleration(sin, 9.99), 0.0);
  EXPECT_EQ(leader_acceleration(sin, 30.01), 0.0);
  EXPECT_NEAR(leader_acceleration(sin, 12.0), -std::sin(12.0), 1e-15);
  EXPECT_NEAR(leader_acceleration(sin, 10.0), -std::sin(10.0), 1e-15);
  EXPECT_NEAR(leader_acceleration(sin, 30.0), -std::sin(30.0), 1e-15);

  EXPECT_EQ(leader_acceleration(three_segment(), 12.0), 1.0);
  EXPECT_EQ(leader_acceleration(three_segment(), 15.0), 0.0);
  EXPECT_EQ(leader_acceleration(three_segment(), 18.0), -1.0);
  EXPECT_EQ(leader_acceleration(three_segment(), 13.0), 1.0);  // shared endpoint: earlier segment
  EXPECT_EQ(leader_acceleration(three_segment(), 21.0), 0.0);

  EXPECT_EQ(leader_acceleration(two_segment(), 12.0), 1.0);
  EXPECT_EQ(leader_acceleration(two_segment(), 18.0), -1.0);
  EXPECT_EQ(leader_acceleration(DisturbanceProfile::none(), 15.0), 0.0);
}

TEST(HistoryBuffer, PreHistoryIsSteady) {
  PlatoonConfig pc{3, 0.2, 1.667, 20.0, 0.3};
  HistoryBuffer history(pc, 0.1, 4);
  const auto past = history.at(-3);
  for (int i = 0; i <= 3; ++i) {
    EXPECT_NEAR(past.x[i], -i * 5.667 - 6.0, 1e-12);
    EXPECT_EQ(past.v[i], 20.0);
  }
}

TEST(HistoryBuffer, RejectsUnretainedSteps) {
  PlatoonConfig pc{1, 0.2, 1.667, 20.0, 0.2};
  HistoryBuffer history(pc, 0.1, 3);
  std::vector<double> x{0.0, -5.667}, v{20.0, 20.0};
  EXPECT_THROW(history.at(0), std::logic_error);
  for (int n = 0; n < 5; ++n) history.push(x, v);
  EXPECT_NO_THROW(history.at(2));
  EXPECT_NO_THROW(history.at(4));
  EXPECT_THROW(history.at(1), std::logic_error);
  EXPECT_THROW(history.at(5), std::logic_error);
}

TEST(ControlInput, Examples) {
  auto s = make(kRowC, 0.2, 1);
  s.dt = 0.1;
  const double gap = s.platoon.desired_gap();

  auto u_for = [&](std::vector<double> x, std::vector<double> v) {
    HistoryBuffer history(s.platoon, s.dt, 3);
    history.push(x, v);
    history.push(x, v);
    history.push(x, v);
    return control_input(history, 1, 0.2, s);  // reads step 0
  };
  EXPECT_NEAR(u_for({0.0, -gap}, {20.0, 20.0}), 0.0, 1e-12);
  EXPECT_NEAR(u_for({1.0, -gap}, {20.0, 20.0}), kRowC.k_x + kRowC.k_xo, 1e-12);
  const double eta = derive_lambda_eta(kRowC, 0.2).eta;
  EXPECT_NEAR(u_for({0.0, -gap}, {20.0, 21.0}), -eta, 1e-12);
}

TEST(ControlInput, UsesDelayedState) {
  auto s = make(kRowC, 0.2, 1);
  s.dt = 0.1;
  const double gap = s.platoon.desired_gap();
  HistoryBuffer history(s.platoon, s.dt, 3);
  std::vector<double> steady{0.0, -gap}, ahead{1.0, -gap}, v{20.0, 20.0};
  history.push(steady, v);
  history.push(ahead, v);
  history.push(ahead, v);
  EXPECT_NEAR(control_input(history, 1, 0.2, s), 0.0, 1e-12);
  EXPECT_THROW(control_input(history, 1, 0.15, s), std::logic_error);
  EXPECT_THROW(control_input(history, 2, 0.2, s), std::out_of_range);
}

TEST(ControlInput, TranslationInvariant) {
  auto s = make(kRowA, 0.2, 4);
  s.dt = 0.1;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5), v(5), shifted(5);
    const double shift = 100.0 * noise(rng);
    for (int i = 0; i <= 4; ++i) {
      x[i] = -i * s.platoon.desired_gap() + noise(rng);
      v[i] = 20.0 + noise(rng);
      shifted[i] = x[i] + shift;
    }
    HistoryBuffer a(s.platoon, s.dt, 3), b(s.platoon, s.dt, 3);
    for (int n = 0; n < 3; ++n) {
      a.push(x, v);
      b.push(shifted, v);
    }
    for (int i = 1; i <= 4; ++i) {
      EXPECT_NEAR(control_input(a, i, 0.2, s), control_input(b, i, 0.2, s), 1e-9);
      EXPECT_NEAR(spacing_error(x[i], x[i - 1], 0.2, 20.0, 1.667),
                  spacing_error(shifted[i], shifted[i - 1], 0.2, 20.0, 1.667), 1e-9);
    }
  }
}

TEST(Scenario, Validation) {
  auto s = make(kRowC, 0.3, 4);
  s.dt = 0.01;
  EXPECT_NO_THROW(validate(s));
  s.dt = 0.007;
  try {
    validate(s);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "delay not an integer multiple of dt");
  }
  s.dt = 0.06;
  EXPECT_THROW(validate(s), ValidationError);
  s.dt = 0.0;
  EXPECT_THROW(validate(s), ValidationError);
  s.dt = 0.005;
  s.t_end = 25.0;
  EXPECT_THROW(validate(s), ValidationError);
  s.t_end = 100.0;
  EXPECT_EQ(s.delay_steps(), 60);
  EXPECT_EQ(s.total_steps(), 20000);
  EXPECT_EQ(integrator_from_string(to_string(Integrator::kEuler)), Integrator::kEuler);
  EXPECT_THROW(integrator_from_string("rk45"), ValidationError);
}

TEST(Simulate, FirstEulerStep) {
  auto s = make(kRowC, 0.2, 1, three_segment());
  s.dt = 0.05;
  s.t_end = 25.0;
  s.integrator = Integrator::kEuler;
  const auto traj = simulate(s);
  ASSERT_GE(traj.samples(), 2u);
  EXPECT_DOUBLE_EQ(traj.times[1], 0.05);
  EXPECT_NEAR(traj.u[0][0], 0.0, 1e-12);
  EXPECT_EQ(traj.v[0][1], 20.0);
  EXPECT_EQ(traj.v[1][1], 20.0);
  EXPECT_NEAR(traj.x[0][1], 1.0, 1e-12);
  EXPECT_NEAR(traj.x[1][1], -s.platoon.desired_gap() + 1.0, 1e-12);
}

TEST(Simulate, EquilibriumIsPreserved) {
  for (const auto& gains : {kRowA, kRowC, kUnstable}) {
    for (auto integrator : {Integrator::kRk4, Integrator::kEuler}) {
      auto s = make(gains, 0.3, 4, DisturbanceProfile::none());
      s.integrator = integrator;
      const auto traj = simulate(s);
      ASSERT_EQ(traj.samples(), 20001u);
      for (double peak : peak_spacing_errors(traj)) EXPECT_LE(peak, 1e-9);
      EXPECT_EQ(settling_time(traj, 1e-6), 0.0);
    }
  }
}

TEST(Simulate, EulerMatchesReference) {
  auto s = make(kUnstable, 0.3, 4, two_segment());
  s.integrator = Integrator::kEuler;
  s.t_end = 60.0;
  const auto traj = simulate(s);
  const auto ref = reference_euler(s);
  ASSERT_EQ(traj.samples(), ref.x.size());
  double worst = 0.0;
  for (std::size_t n = 0; n < traj.samples(); n += 7) {
    for (int i = 0; i <= 4; ++i) {
      worst = std::max(worst, std::abs(traj.x[i][n] - ref.x[n][i]));
      worst = std::max(worst, std::abs(traj.v[i][n] - ref.v[n][i]));
    }
    for (int i = 1; i <= 4; ++i) worst = std::max(worst, std::abs(traj.u[i - 1][n] - ref.u[n][i - 1]));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Simulate, Rk4MatchesExactHoldReference) {
  for (const auto& gains : {kRowC, kUnstable}) {
    auto s = make(gains, 0.3, 4);
    const auto traj = simulate(s);
    const auto ref = reference_exact_hold(s);
    ASSERT_EQ(traj.samples(), ref.x.size());
    double worst = 0.0;
    for (std::size_t n = 0; n < traj.samples(); n += 5) {
      for (int i = 1; i <= 4; ++i) {
        const double e_ref = ref.x[n][i] - ref.x[n][i - 1] + 0.2 * 20.0 + 1.667;
        worst = std::max(worst, std::abs(traj.e[i - 1][n] - e_ref));
      }
      worst = std::max(worst, std::abs(traj.v[0][n] - ref.v[n][0]));
    }
    EXPECT_LT(worst, 1e-7);
  }
}

TEST(Simulate, SpacingErrorsMatchPositions) {
  auto s = make(kRowA, 0.1, 4);
  const auto traj = simulate(s);
  for (std::size_t n = 0; n < traj.samples(); ++n) {
    for (int i = 1; i <= 4; ++i) {
      EXPECT_EQ(traj.e[i - 1][n], spacing_error(traj.x[i][n], traj.x[i - 1][n], 0.2, 20.0, 1.667));
    }
  }
}

TEST(Simulate, RefinementIsFirstOrder) {
  // Held delayed inputs make both schemes first order: halving dt halves the
  // change in the peak error.
  for (auto integrator : {Integrator::kRk4, Integrator::kEuler}) {
    std::vector<double> peaks;
    for (double dt : {0.01, 0.005, 0.0025}) {
      auto s = make(kRowA, 0.1, 4);
      s.dt = dt;
      s.integrator = integrator;
      peaks.push_back(peak_spacing_errors(simulate(s))[0]);
    }
    const double d1 = std::abs(peaks[0] - peaks[1]);
    const double d2 = std::abs(peaks[1] - peaks[2]);
    ASSERT_GT(d2, 0.0);
    EXPECT_NEAR(d1 / d2, 2.0, 0.3) << to_string(integrator);
    EXPECT_LT(d1, 5e-3);
  }
}

TEST(Simulate, SinusoidLeavesSteadyOffset) {
  // The window leaves the leader cos(30) - cos(10) faster than v_o, so the
  // control law settles at e_1 = -(k_x h + k_vo) dv / lambda and
  // e_i = (k_x / lambda) e_{i-1}.
  const auto s = make(kRowC, 0.3, 4);
  const auto traj = simulate(s);
  const double dv = std::cos(30.0) - std::cos(10.0);
  const double lambda = kRowC.k_x + kRowC.k_xo;
  double expected = -(kRowC.k_x * 0.2 + kRowC.k_vo) * dv / lambda;
  EXPECT_NEAR(expected, -1.66553, 1e-4);
  for (int i = 1; i <= 4; ++i) {
    EXPECT_NEAR(traj.e[i - 1].back(), expected, 1e-4) << "follower " << i;
    expected *= kRowC.k_x / lambda;
  }
  EXPECT_NEAR(traj.v[0].back() - 20.0, dv, 1e-9);
  EXPECT_FALSE(settling_time(traj, 1e-3).has_value());
}

TEST(Simulate, StringStableRowsDecreaseUpstream) {
  const ControlGains rows[] = {kRowA, {0.213, 0.75, 0.75, 0.297}, kRowC};
  const double taus[] = {0.1, 0.2, 0.3};
  for (int r = 0; r < 3; ++r) {
    const auto peaks = peak_spacing_errors(simulate(make(rows[r], taus[r], 4)));
    for (int i = 1; i < 4; ++i) EXPECT_LT(peaks[i], peaks[i - 1]) << "row " << r;
  }
}

TEST(Simulate, StringUnstableGainsAmplifyUpstream) {
  const auto traj = simulate(make(kUnstable, 0.3, 4));
  const auto peaks = peak_spacing_errors(traj);
  for (int i = 1; i < 4; ++i) EXPECT_GT(peaks[i], peaks[i - 1]);
  EXPECT_NEAR(peaks[0], 3.61, 0.01);
  EXPECT_NEAR(peaks[3], 34.11, 0.05);
  EXPECT_FALSE(settling_time(traj, 1e-3).has_value());
}

TEST(Simulate, ZeroNetDisturbancesSettle) {
  for (const auto& profile : {three_segment(), two_segment()}) {
    const auto traj = simulate(make(kRowC, 0.3, 4, profile));
    const auto t = settling_time(traj, 1e-3);
    ASSERT_TRUE(t.has_value());
    EXPECT_GT(*t, 20.0);
    EXPECT_LT(*t, 60.0);
  }
}

TEST(Simulate, PlantVerdictPredictsDecay) {
  const auto stable = simulate(make(kRowC, 0.3, 4, two_segment()));
  ASSERT_TRUE(plant_stability_check(derive_lambda_eta(kRowC, 0.2), 0.3).stable);
  for (int i = 1; i <= 4; ++i) {
    EXPECT_LT(window_peak(stable, i, 80, 100), 1e-3 * window_peak(stable, i, 20, 40));
  }

  const ControlGains too_stiff{0.249, 0.75, 0.75, 4.751};  // lambda = 5
  const auto verdict = plant_stability_check(derive_lambda_eta(too_stiff, 0.2), 0.3);
  ASSERT_FALSE(verdict.stable);
  ASSERT_LT(verdict.margin, -0.1);
  const auto unstable = simulate(make(too_stiff, 0.3, 4, two_segment()));
  EXPECT_TRUE(unstable.diverged ||
              window_peak(unstable, 1, 80, 100) > window_peak(unstable, 1, 20, 40));
}

TEST(Simulate, DivergenceTruncates) {
  const ControlGains wild{1.0, 0.5, 0.5, 199.0};
  auto s = make(wild, 0.3, 4);
  s.t_end = 400.0;
  const auto traj = simulate(s);
  EXPECT_TRUE(traj.diverged);
  EXPECT_LT(traj.samples(), 80001u);
  for (int i = 0; i <= 4; ++i) {
    EXPECT_TRUE(std::isfinite(traj.x[i].back()));
    EXPECT_TRUE(std::isfinite(traj.v[i].back()));
  }
  EXPECT_FALSE(settling_time(traj, 1e-3).has_value());
}

TEST(TrajectoryCsv, HeaderAndRows) {
  auto s = make(kRowC, 0.3, 2);
  s.t_end = 31.0;
  const auto traj = simulate(s);
  std::ostringstream a, b;
  write_trajectory_csv(a, traj);
  write_trajectory_csv(b, simulate(s));
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x_0,x_1,x_2,v_0,v_1,v_2,u_1,u_2,e_1,e_2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, traj.samples());
}

#include "platoon/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "platoon/csv.hpp"

namespace platoon {
namespace {

constexpr int kBisectionMaxIterations = 200;
constexpr double kBisectionTolerance = 1e-12;
constexpr double kPoleThreshold = 1e-12;

double corner_eta(double tau) { return std::numbers::pi / (2.0 * tau); }

void require_positive(double value, const char* what) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw ValidationError(std::string(what) + " must be strictly positive");
  }
}

void validate(const LambdaEta& le) {
  require_positive(le.lambda, "lambda");
  require_positive(le.eta, "eta");
}

// w^2 coefficient of Xi that does not carry a trigonometric factor.
double xi_quadratic_coefficient(const ControlGains& g, double h) {
  return g.k_x * g.k_x * h * h + 2.0 * g.k_x * (g.k_v + g.k_vo) * h + g.k_vo * g.k_vo +
         2.0 * g.k_v * g.k_vo;
}

// Solves eta = w sin(tau w) on (0, pi/(2 tau)); the map is strictly increasing there.
double critical_frequency(double eta, double tau) {
  double lo = 0.0;
  double hi = corner_eta(tau);
  auto residual = [&](double w) { return w * std::sin(tau * w) - eta; };
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < kBisectionMaxIterations; ++iter) {
    mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) <= kBisectionTolerance) return mid;
    if (r < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  if (std::abs(residual(mid)) > 1e-10) {
    throw NumericalError("bisection for the critical frequency did not converge");
  }
  return mid;
}

}  // namespace

DCurvePoint dcurve_point(double w, double tau) {
  require_positive(tau, "delay tau");
  if (!(w > 0.0 && w < corner_eta(tau))) {
    throw std::domain_error("D-curve frequency must lie in (0, pi/(2 tau))");
  }
  return {w, w * w * std::cos(tau * w), w * std::sin(tau * w)};
}

std::complex<double> characteristic(std::complex<double> s, const LambdaEta& le, double tau) {
  return s * s + (le.eta * s + le.lambda) * std::exp(-tau * s);
}

std::complex<double> characteristic_derivative(std::complex<double> s, const LambdaEta& le,
                                               double tau) {
  const auto delay = std::exp(-tau * s);
  return 2.0 * s + le.eta * delay - tau * (le.eta * s + le.lambda) * delay;
}

StabilityVerdict plant_stability_check(const LambdaEta& le, double tau) {
  validate(le);
  require_positive(tau, "delay tau");
  const double corner = corner_eta(tau);
  if (le.eta >= corner) return {false, corner - le.eta, std::nullopt};
  const double w_star = critical_frequency(le.eta, tau);
  const double lambda_star = w_star * w_star * std::cos(tau * w_star);
  return {le.lambda < lambda_star, lambda_star - le.lambda, lambda_star};
}

std::vector<DCurvePoint> plant_region_boundary(double tau, int n_points) {
  require_positive(tau, "delay tau");
  if (n_points < 2) throw ValidationError("region boundary needs at least 2 points");
  const double corner = corner_eta(tau);
  std::vector<DCurvePoint> points;
  points.reserve(static_cast<std::size_t>(n_points));
  // Endpoints are the limits w -> 0+ and w -> pi/(2 tau)-.
  points.push_back({0.0, 0.0, 0.0});
  for (int k = 1; k < n_points - 1; ++k) {
    points.push_back(dcurve_point(corner * k / (n_points - 1), tau));
  }
  points.push_back({corner, 0.0, corner});
  return points;
}

StabilityVerdict string_stability_sufficient(const ControlGains& gains, double h, double tau) {
  require_positive(tau, "delay tau");
  const auto le = derive_lambda_eta(gains, h);
  const double lambda_slack = gains.k_v * gains.k_vo - le.lambda;
  const double eta_slack = 1.0 / (2.0 * tau) - le.eta;
  return {lambda_slack >= 0.0 && eta_slack >= 0.0, std::min(lambda_slack, eta_slack),
          std::nullopt};
}

double max_headway(const ControlGains& gains, double tau) {
  validate(gains);
  require_positive(tau, "delay tau");
  const double slack = 1.0 / (2.0 * tau) - gains.k_v - gains.k_vo;
  if (!(slack > 0.0)) {
    throw InfeasibleError("no feasible headway: k_v + k_vo must be below 1/(2 tau)");
  }
  return slack / gains.k_x;
}

double xi(double w, const ControlGains& gains, double h, double tau) {
  const auto le = derive_lambda_eta(gains, h);
  const double w2 = w * w;
  return w2 * w2 - 2.0 * le.eta * std::sin(tau * w) * w2 * w +
         xi_quadratic_coefficient(gains, h) * w2 - 2.0 * le.lambda * std::cos(tau * w) * w2 +
         gains.k_xo * gains.k_xo + 2.0 * gains.k_x * gains.k_xo;
}

double transfer_magnitude(double w, const ControlGains& gains, double h, double tau) {
  if (!(w >= 0.0)) throw std::domain_error("frequency must be non-negative");
  const double numerator = gains.k_v * gains.k_v * w * w + gains.k_x * gains.k_x;
  const double denominator = xi(w, gains, h, tau) + numerator;
  if (denominator < kPoleThreshold) {
    throw NumericalError("pole of the spacing error transfer function at w = " +
                         std::to_string(w) + " (plant-unstable parameterization)");
  }
  return std::sqrt(numerator / denominator);
}

double sweep_tail_bound(const ControlGains& gains, double h) {
  const auto le = derive_lambda_eta(gains, h);
  return 2.0 * (le.eta + 1.0 + std::sqrt(2.0 * le.lambda + xi_quadratic_coefficient(gains, h)));
}

FrequencySweepConfig default_sweep(const ControlGains& gains, double h) {
  constexpr double kStep = 1e-3;
  return {kStep, sweep_tail_bound(gains, h), kStep};
}

StabilityVerdict string_stability_exact(const ControlGains& gains, double h, double tau,
                                        const FrequencySweepConfig& sweep) {
  require_positive(tau, "delay tau");
  require_positive(sweep.w_min, "sweep w_min");
  require_positive(sweep.step, "sweep step");
  if (sweep.w_max < sweep_tail_bound(gains, h)) {
    throw std::invalid_argument("sweep w_max is below the analytic tail bound");
  }
  const double constant = gains.k_x * gains.k_x;
  const double kv2 = gains.k_v * gains.k_v;
  std::optional<double> first_violation;
  double peak = 0.0;
  double peak_w = sweep.w_min;
  const auto count = static_cast<long>(std::floor((sweep.w_max - sweep.w_min) / sweep.step + 1e-9));
  for (long k = 0; k <= count; ++k) {
    const double w = sweep.w_min + static_cast<double>(k) * sweep.step;
    const double value = xi(w, gains, h, tau);
    const double numerator = kv2 * w * w + constant;
    const double denominator = value + numerator;
    const double magnitude = denominator > 0.0 ? std::sqrt(numerator / denominator)
                                               : std::numeric_limits<double>::infinity();
    if (magnitude > peak) {
      peak = magnitude;
      peak_w = w;
    }
    if (value <= 0.0 && !first_violation) first_violation = w;
  }
  if (first_violation) return {false, 1.0 - peak, first_violation};
  return {true, 1.0 - peak, peak_w};
}

SpectralAbscissa spectral_abscissa(const LambdaEta& le, double tau, const RootSearchConfig& search) {
  validate(le);
  require_positive(tau, "delay tau");
  const double im_max = search.im_max > 0.0 ? search.im_max : 4.0 * std::numbers::pi / tau;
  const int nr = search.grid_re;
  const int ni = search.grid_im;
  if (nr < 3 || ni < 3 || !(search.re_max > search.re_min) || !(im_max > search.im_min)) {
    throw ValidationError("root search window must be non-empty with at least 3x3 grid nodes");
  }
  const double dre = (search.re_max - search.re_min) / (nr - 1);
  const double dim = (im_max - search.im_min) / (ni - 1);
  auto node = [&](int a, int b) {
    return std::complex<double>(search.re_min + a * dre, search.im_min + b * dim);
  };

  std::vector<double> modulus(static_cast<std::size_t>(nr) * ni);
  auto at = [&](int a, int b) -> double& { return modulus[static_cast<std::size_t>(a) * ni + b]; };
  for (int a = 0; a < nr; ++a) {
    for (int b = 0; b < ni; ++b) at(a, b) = std::abs(characteristic(node(a, b), le, tau));
  }

  SpectralAbscissa result;
  result.value = search.re_min;
  const double slack_re = dre;
  const double slack_im = dim;
  auto inside = [&](std::complex<double> s) {
    return s.real() >= search.re_min - slack_re && s.real() <= search.re_max + slack_re &&
           s.imag() >= search.im_min - slack_im && s.imag() <= im_max + slack_im;
  };
  auto add_root = [&](std::complex<double> s) {
    for (const auto& r : result.roots) {
      if (std::abs(r - s) < 1e-7 * std::max(1.0, std::abs(s))) return;
    }
    result.roots.push_back(s);
  };

  for (int a = 0; a < nr; ++a) {
    for (int b = 0; b < ni; ++b) {
      const double centre = at(a, b);
      bool minimum = true;
      for (int da = -1; da <= 1 && minimum; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const int na = a + da;
          const int nb = b + db;
          if (na < 0 || na >= nr || nb < 0 || nb >= ni) continue;
          if (at(na, nb) < centre) {
            minimum = false;
            break;
          }
        }
      }
      if (!minimum) continue;

      std::complex<double> s = node(a, b);
      bool converged = false;
      for (int iter = 0; iter < search.newton_iterations; ++iter) {
        const auto f = characteristic(s, le, tau);
        const auto df = characteristic_derivative(s, le, tau);
        if (std::abs(df) == 0.0) break;
        const auto delta = f / df;
        s -= delta;
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) break;
        if (std::abs(delta) <= search.newton_tolerance * std::max(1.0, std::abs(s))) {
          converged = true;
          break;
        }
      }
      if (converged) {
        // Roots outside the window belong to another search; drop them.
        if (inside(s)) add_root(s);
        continue;
      }
      const bool on_edge = a == 0 || a == nr - 1 || b == ni - 1;
      if (!on_edge) {
        add_root(node(a, b));
        result.coarse = true;
      }
    }
  }

  result.roots_found = static_cast<int>(result.roots.size());
  for (const auto& r : result.roots) result.value = std::max(result.value, r.real());
  if (result.roots.empty()) result.value = search.re_min;
  return result;
}

void write_region_csv(std::ostream& out, const std::vector<DCurvePoint>& boundary) {
  csv::write_row(out, {"w", "lambda", "eta"});
  for (const auto& p : boundary) {
    csv::write_row(out, {csv::format(p.w), csv::format(p.lambda), csv::format(p.eta)});
  }
}

void write_magnitude_csv(std::ostream& out, const ControlGains& gains, double h, double tau,
                         const FrequencySweepConfig& sweep) {
  csv::write_row(out, {"w", "magnitude"});
  const auto count = static_cast<long>(std::floor((sweep.w_max - sweep.w_min) / sweep.step + 1e-9));
  for (long k = 0; k <= count; ++k) {
    const double w = sweep.w_min + static_cast<double>(k) * sweep.step;
    const double numerator = gains.k_v * gains.k_v * w * w + gains.k_x * gains.k_x;
    const double denominator = xi(w, gains, h, tau) + numerator;
    const double magnitude = denominator > 0.0 ? std::sqrt(numerator / denominator)
                                               : std::numeric_limits<double>::infinity();
    csv::write_row(out, {csv::format(w), csv::format(magnitude)});
  }
}

}  // namespace platoon

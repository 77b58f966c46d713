#ifndef PLATOON_STABILITY_HPP
#define PLATOON_STABILITY_HPP

#include <complex>
#include <ostream>
#include <vector>

#include "platoon/core_types.hpp"

namespace platoon {

/// Point of the stability boundary in the (lambda, eta) plane where the
/// characteristic function has the purely imaginary root s = j*w.
struct DCurvePoint {
  double w = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
};

struct FrequencySweepConfig {
  double w_min = 1e-3;
  double w_max = 10.0;
  double step = 1e-3;
};

/// lambda = w^2 cos(tau w), eta = w sin(tau w) for 0 < w < pi/(2 tau).
/// Throws std::domain_error outside that interval.
DCurvePoint dcurve_point(double w, double tau);

/// Theta(s) = s^2 + (eta s + lambda) e^{-tau s}
std::complex<double> characteristic(std::complex<double> s, const LambdaEta& le, double tau);
std::complex<double> characteristic_derivative(std::complex<double> s, const LambdaEta& le,
                                               double tau);

/// Exact plant-stability test. Solves eta = w sin(tau w) for w* by bisection
/// on (0, pi/(2 tau)); stable iff lambda < lambda* = w*^2 cos(tau w*). The
/// witness is lambda*. For eta at or beyond the corner pi/(2 tau) the verdict
/// is unstable with margin pi/(2 tau) - eta and no witness.
StabilityVerdict plant_stability_check(const LambdaEta& le, double tau);

/// Samples the D-curve for w in (0, pi/(2 tau)). The last point is the corner
/// (0, pi/(2 tau)) exactly.
std::vector<DCurvePoint> plant_region_boundary(double tau, int n_points);

/// Delay-independent sufficient condition lambda <= k_v k_vo and
/// eta <= 1/(2 tau). Boundary values count as stable, so a stable verdict
/// can carry margin 0.
StabilityVerdict string_stability_sufficient(const ControlGains& gains, double h, double tau);

/// Largest headway satisfying the eta clause of the sufficient condition:
/// (1/(2 tau) - k_v - k_vo) / k_x. Throws InfeasibleError when no positive
/// headway exists.
double max_headway(const ControlGains& gains, double tau);

/// Xi(w) = |Theta(jw)|^2 - (k_v^2 w^2 + k_x^2), written out term by term.
double xi(double w, const ControlGains& gains, double h, double tau);

/// |H(jw)| of the spacing error transfer function. Throws NumericalError when
/// |Theta(jw)|^2 < 1e-12 (w sits on a characteristic root).
double transfer_magnitude(double w, const ControlGains& gains, double h, double tau);

/// Frequency beyond which Xi(w) > 0 is guaranteed:
/// 2 (eta + 1 + sqrt(2 lambda + C)), C the w^2 coefficient of Xi.
double sweep_tail_bound(const ControlGains& gains, double h);

/// Sweep over (0, tail bound] with 1e-3 rad/s resolution.
FrequencySweepConfig default_sweep(const ControlGains& gains, double h);

/// Decides |H(jw)| < 1 for all w > 0 by sweeping Xi on the grid and relying on
/// the analytic tail bound beyond w_max. Margin is 1 - max |H| on the grid.
/// Witness: first violating frequency when unstable, else the frequency of
/// the peak magnitude. Throws std::invalid_argument when w_max is below the
/// tail bound.
StabilityVerdict string_stability_exact(const ControlGains& gains, double h, double tau,
                                        const FrequencySweepConfig& sweep);

struct RootSearchConfig {
  double re_min = -5.0;
  double re_max = 1.0;
  double im_min = 0.0;
  double im_max = 0.0;  // <= 0 selects 4 pi / tau
  int grid_re = 400;
  int grid_im = 400;
  int newton_iterations = 60;
  double newton_tolerance = 1e-13;
};

struct SpectralAbscissa {
  double value = 0.0;
  bool coarse = false;    // at least one seed fell back to its grid estimate
  int roots_found = 0;
  std::vector<std::complex<double>> roots;
};

/// Largest real part among roots of Theta inside the search window. Roots are
/// seeded from local minima of |Theta| on a grid and polished by Newton's
/// method.
SpectralAbscissa spectral_abscissa(const LambdaEta& le, double tau,
                                   const RootSearchConfig& search = {});

/// CSV "w,lambda,eta".
void write_region_csv(std::ostream& out, const std::vector<DCurvePoint>& boundary);

/// CSV "w,magnitude" over the sweep grid.
void write_magnitude_csv(std::ostream& out, const ControlGains& gains, double h, double tau,
                         const FrequencySweepConfig& sweep);

}  // namespace platoon

#endif  // PLATOON_STABILITY_HPP

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>

namespace specexec {

struct Quadrature {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  // Quantile of the dominating law used to place the finite/tail split for
  // improper integrals. Only consulted by callers that know their tail.
  double tail_quantile = 1.0 - 1e-9;
  int max_intervals = 20000;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

using RealFunction = std::function<double(double)>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Adaptive Gauss-Kronrod (7/15) integration of f over [lo, hi]. `hi` may be
// +infinity; the range is then split at the last breakpoint (or lo + 1) and the
// tail is mapped onto (0, 1] with t = B / w. Breakpoints inside (lo, hi) are
// where f has kinks or jumps (e.g. a Pareto scale) and are used as panel edges.
// Throws ConvergenceError when the interval budget is exhausted.
QuadratureResult integrate_with_error(const RealFunction& f, double lo, double hi,
                                      const Quadrature& q = {},
                                      std::span<const double> breakpoints = {});

inline double integrate(const RealFunction& f, double lo, double hi, const Quadrature& q = {},
                        std::span<const double> breakpoints = {}) {
  return integrate_with_error(f, lo, hi, q, breakpoints).value;
}

struct MinimizeResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

// Golden-section search for the minimum of a unimodal f on [lo, hi]. The
// returned point is the best one evaluated, which may be an endpoint.
MinimizeResult golden_section_minimize(const RealFunction& f, double lo, double hi,
                                       double x_tol = 1e-9, int max_iter = 200);

// Coarse scan over `grid_points` evenly spaced points, then golden-section in
// the bracket around the best point. Tolerates non-unimodal objectives with a
// single dominant basin.
MinimizeResult scan_then_minimize(const RealFunction& f, double lo, double hi, int grid_points,
                                  double x_tol = 1e-9);

}  // namespace specexec

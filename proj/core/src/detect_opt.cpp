#include "specexec/detect_opt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "specexec/errors.hpp"
#include "specexec/quadrature.hpp"

namespace specexec {

namespace {

void check(double sigma, double s) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("progress fraction s must lie in (0, 1)");
}

}  // namespace

void DetectionParams::validate() const {
  check(sigma, s);
  if (cap < 1) throw std::invalid_argument("copy cap must be >= 1");
  if (copies < 1 || copies > cap) throw std::invalid_argument("copies must lie in [1, cap]");
}

double straggler_probability(double sigma, double s, const ParetoDist& d) {
  check(sigma, s);
  return d.survival(sigma * d.mean() / (1.0 - s));
}

double expected_straggler_cost(int copies, double sigma, double s, const ParetoDist& d) {
  check(sigma, s);
  if (copies < 1) throw std::invalid_argument("copies must be >= 1");
  if (copies * d.shape() <= 1.0) throw DivergingMomentError("straggler cost diverges");
  const double threshold = sigma * d.mean();
  const double keep = 1.0 - s;
  const double extra = copies - 1;
  const double head = integrate_survival_power(d, extra, 0.0, threshold);
  // Given the straggler event, (1 - s) t1 has survival S(t / (1 - s)) / S(T / (1 - s)).
  auto joint = [&](double t) { return std::pow(d.survival(t), extra) * d.survival(t / keep); };
  const double edges[] = {d.scale() * keep, d.scale()};
  Quadrature q;
  q.rel_tol = 1e-10;
  const double tail = integrate(joint, threshold, kInfinity, q, edges) / d.survival(threshold / keep);
  return copies * (head + tail);
}

double expected_task_cost(int copies, double sigma, double s, const ParetoDist& d) {
  const double u = sigma * d.mean() / (1.0 - s);
  const double p = d.survival(u);
  // E[t1; t1 > u] = u S(u) + Int_u^inf S
  const double flagged_mass = u * p + integrate_survival_power(d, 1.0, u, kInfinity);
  const double unflagged_mass = d.mean() - flagged_mass;
  return p * expected_straggler_cost(copies, sigma, s, d) + s * flagged_mass + unflagged_mass;
}

int optimal_c(double sigma, double s, const ParetoDist& d, int cap) {
  if (cap < 1) throw std::invalid_argument("copy cap must be >= 1");
  int best = 1;
  double best_cost = expected_straggler_cost(1, sigma, s, d);
  for (int c = 2; c <= cap; ++c) {
    const double cost = expected_straggler_cost(c, sigma, s, d);
    if (cost < best_cost) {
      best = c;
      best_cost = cost;
    }
  }
  return best;
}

SigmaOptimum optimal_sigma(double s, const ParetoDist& d, int cap, double sigma_max) {
  if (!(sigma_max > 1.0)) throw std::invalid_argument("sigma_max must exceed 1");
  auto cost = [&](double sigma) {
    return expected_task_cost(optimal_c(sigma, s, d, cap), sigma, s, d);
  };
  const double lo = 1.0 + 1e-9;
  const MinimizeResult best = scan_then_minimize(cost, lo, sigma_max, 200, 1e-9);
  const bool boundary = sigma_max - best.x < 1e-6;
  const double sigma = boundary ? sigma_max : best.x;
  return {sigma, boundary ? cost(sigma_max) : best.value, optimal_c(sigma, s, d, cap), boundary};
}

}  // namespace specexec

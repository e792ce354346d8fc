#include "specexec/ese_opt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "specexec/clone_opt.hpp"
#include "specexec/quadrature.hpp"

namespace specexec {

namespace {

// Antiderivative of expected_min_with in a, zero at a = 0.
double min_antiderivative(double a, const ParetoDist& d) {
  const double mu = d.scale();
  const double alpha = d.shape();
  if (a <= mu) return 0.5 * a * a;
  const double k = 2.0 - alpha;
  const double log_ratio = std::log(a / mu);
  // (a^k - mu^k) / k, stable as k -> 0
  const double power_term =
      std::abs(k) < 1e-12 ? log_ratio : std::pow(mu, k) * std::expm1(k * log_ratio) / k;
  return 0.5 * mu * mu + d.mean() * (a - mu) - std::pow(mu, alpha) / (alpha - 1.0) * power_term;
}

}  // namespace

void EseParams::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(small_task_fraction > 0.0 && small_task_fraction <= 1.0))
    throw std::invalid_argument("small-job task fraction must lie in (0, 1]");
  if (!(small_duration > 0.0)) throw std::invalid_argument("small-job duration bound must be positive");
  if (cap < 1) throw std::invalid_argument("copy cap must be >= 1");
}

double expected_min_with(double a, const ParetoDist& d) {
  if (a <= 0.0) return 0.0;
  const double mu = d.scale();
  const double alpha = d.shape();
  if (a <= mu) return a;
  return d.mean() - std::pow(mu, alpha) * std::pow(a, 1.0 - alpha) / (alpha - 1.0);
}

double expected_resource(double sigma, const ParetoDist& d) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double mu = d.scale();
  const double alpha = d.shape();
  const double threshold = sigma * d.mean();
  auto density = [&](double t) { return alpha * std::pow(mu, alpha) / std::pow(t, alpha + 1.0); };

  // Tasks shorter than the threshold are never duplicated: E[t; t < T].
  double short_part = 0.0;
  if (threshold > mu) {
    // E[t; t < T] = E[t] - E[t; t >= T] = E[t] - T S(T) - Int_T^inf S
    short_part = d.mean() - threshold * d.survival(threshold) -
                 integrate_survival_power(d, 1.0, threshold, kInfinity);
  }

  const double m_threshold = min_antiderivative(threshold, d);
  auto long_part = [&](double t) {
    const double gap = t - threshold;
    const double duplicated = 0.5 * gap * gap + 2.0 * (min_antiderivative(t, d) - m_threshold);
    return density(t) * (duplicated / t + threshold);
  };
  Quadrature q;
  q.rel_tol = 1e-10;
  const double lo = std::max(threshold, mu);
  return short_part + integrate(long_part, lo, kInfinity, q);
}

EseSigmaOptimum optimal_sigma_ese(const ParetoDist& d) {
  constexpr double lo = 0.1;
  constexpr double hi = 10.0;
  auto objective = [&](double sigma) { return expected_resource(sigma, d); };
  const MinimizeResult best = scan_then_minimize(objective, lo, hi, 200, 1e-5);
  const bool boundary = best.x - lo < 1e-3 || hi - best.x < 1e-3;
  return {best.x, best.value, boundary};
}

int small_job_clone_count(int tasks, const ParetoDist& d, double gamma, int cap, double slot,
                          double arrival) {
  if (tasks < 1) throw std::invalid_argument("task count must be >= 1");
  if (cap < 1) throw std::invalid_argument("copy cap must be >= 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("resource rate must be nonnegative");
  const PendingJob job{0, tasks, arrival, d};
  int best = 1;
  double best_value = job_objective(job, 1.0, slot, gamma);
  for (int c = 2; c <= cap; ++c) {
    const double value = job_objective(job, c, slot, gamma);
    if (value > best_value) {
      best = c;
      best_value = value;
    }
  }
  return best;
}

}  // namespace specexec

#include "specexec/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "specexec/errors.hpp"

namespace specexec {

void WorkloadProfile::validate() const {
  if (!(arrival_rate >= 0.0)) throw std::invalid_argument("arrival rate must be nonnegative");
  if (!(mean_tasks > 0.0)) throw std::invalid_argument("mean task count must be positive");
  if (machines < 1) throw std::invalid_argument("machine count must be >= 1");
}

double task_delay_no_spec_at(double omega, const ParetoDist& law) {
  const double es = law.mean();
  const double es2 = law.second_moment();
  const double rate = omega / es;  // per-machine task arrival rate
  const double utilization = rate * es;
  if (utilization >= 1.0)
    throw UnstableQueueError("per-machine utilization " + std::to_string(utilization) + " >= 1");
  return rate * es2 / (2.0 * (1.0 - utilization)) + es;
}

double task_delay_no_spec(const WorkloadProfile& p) {
  p.validate();
  return task_delay_no_spec_at(p.omega(), p.task_law);
}

bool clone_overload_check(const WorkloadProfile& p) {
  p.validate();
  const double a = p.task_law.shape();
  return p.arrival_rate * p.mean_tasks * p.task_law.mean() * 4.0 * (a - 1.0) / (2.0 * a - 1.0) <
         static_cast<double>(p.machines);
}

double clone_delay_two_copies_at(double omega, const ParetoDist& law) {
  const double a = law.shape();
  const double denominator = 2.0 * a - 1.0 - 4.0 * omega * (a - 1.0);
  if (denominator <= 0.0)
    throw SaturationError("two-copy cloning saturates at omega = " + std::to_string(omega));
  const double load_term =
      omega * (a - 1.0) * (1.0 - 4.0 * a * a + 4.0 * a) / (a * (2.0 * a - 1.0));
  return law.mean() * (load_term + 2.0 * (a - 1.0)) / denominator;
}

double clone_delay_two_copies(const WorkloadProfile& p) {
  p.validate();
  return clone_delay_two_copies_at(p.omega(), p.task_law);
}

const char* to_string(CutoffKind kind) {
  switch (kind) {
    case CutoffKind::Interior: return "interior";
    case CutoffKind::WholeInterval: return "whole_interval";
    case CutoffKind::Nowhere: return "nowhere";
  }
  return "unknown";
}

RegimeReport cutoff(const WorkloadProfile& p) {
  p.validate();
  const ParetoDist& law = p.task_law;
  const double a = law.shape();
  // Both delay formulas need a finite second moment; fail before searching.
  law.second_moment();

  const double clone_bound = (2.0 * a - 1.0) / (4.0 * (a - 1.0));
  const double bound = std::min(1.0, clone_bound);
  auto clone_wins = [&](double omega) {
    return clone_delay_two_copies_at(omega, law) < task_delay_no_spec_at(omega, law);
  };

  // Scan (0, bound) for the last point where cloning wins.
  constexpr int kGrid = 4000;
  const double step = bound / kGrid;
  int last_win = -1;
  for (int i = 1; i < kGrid; ++i)
    if (clone_wins(step * i)) last_win = i;

  RegimeReport report{};
  report.omega = p.omega();
  report.feasibility_bound = bound;
  if (last_win < 0) {
    report.kind = CutoffKind::Nowhere;
    report.omega_upper = 0.0;
  } else if (last_win == kGrid - 1) {
    report.kind = CutoffKind::WholeInterval;
    report.omega_upper = bound;
  } else {
    double lo = step * last_win;
    double hi = step * (last_win + 1);
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      (clone_wins(mid) ? lo : hi) = mid;
    }
    report.kind = CutoffKind::Interior;
    report.omega_upper = lo;
  }
  report.lambda_upper = report.omega_upper * p.machines / (p.mean_tasks * law.mean());
  // Restate omega_upper from lambda_upper so the two agree to the last bit.
  report.omega_upper = report.lambda_upper * p.mean_tasks * law.mean() / p.machines;

  try {
    report.delay_no_spec = task_delay_no_spec_at(report.omega, law);
  } catch (const UnstableQueueError&) {
  }
  try {
    report.delay_clone = clone_delay_two_copies_at(report.omega, law);
  } catch (const SaturationError&) {
  }
  report.cloning_feasible = clone_overload_check(p) && report.omega < report.omega_upper;
  return report;
}

}  // namespace specexec

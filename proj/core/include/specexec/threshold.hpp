#pragma once

#include <optional>

#include "specexec/dist.hpp"

namespace specexec {

// Long-run workload seen by the cluster, with the task law shared by all jobs.
struct WorkloadProfile {
  double arrival_rate;  // jobs per unit time
  double mean_tasks;    // E[m_i]
  ParetoDist task_law;
  int machines;

  void validate() const;

  double task_rate() const { return mean_tasks * arrival_rate; }
  double per_machine_task_rate() const { return task_rate() / machines; }
  // lambda * E[m] * E[s] / M
  double omega() const { return arrival_rate * mean_tasks * task_law.mean() / machines; }
};

enum class CutoffKind {
  Interior,       // cloning wins below omega_upper and loses just above it
  WholeInterval,  // cloning wins up to the feasibility bound
  Nowhere,        // cloning never wins
};

// Cutoff between the lightly and heavily loaded regimes. Average copies per
// task under cloning is at least 2; the analysis fixes it at exactly 2.
struct RegimeReport {
  std::optional<double> delay_no_spec;  // W_t at the profile's load, empty if unstable
  std::optional<double> delay_clone;    // W_t^c at the profile's load, empty if saturated
  double omega;
  double omega_upper;
  double lambda_upper;
  double feasibility_bound;
  CutoffKind kind;
  bool cloning_feasible;
};

// M/G/1 mean task delay without speculation. Throws UnstableQueueError when
// utilization >= 1 and DivergingMomentError when shape <= 2.
double task_delay_no_spec(const WorkloadProfile& p);
double task_delay_no_spec_at(double omega, const ParetoDist& law);

// Necessary condition for cloning with two copies not to overload the cluster.
bool clone_overload_check(const WorkloadProfile& p);

// Mean task delay when every task runs two copies. Throws SaturationError
// when the denominator is nonpositive.
double clone_delay_two_copies(const WorkloadProfile& p);
double clone_delay_two_copies_at(double omega, const ParetoDist& law);

// Largest omega for which cloning beats no speculation, found by a grid scan
// for the last sign change followed by bisection to 1e-9.
RegimeReport cutoff(const WorkloadProfile& p);

const char* to_string(CutoffKind kind);

}  // namespace specexec

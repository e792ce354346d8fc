#pragma once

#include "specexec/dist.hpp"

namespace specexec {

// Heavy-load settings. small_task_fraction is eta, small_duration is the
// mean-duration bound for "small" jobs (not a dual multiplier).
struct EseParams {
  double sigma = 1.7;
  double small_task_fraction = 0.1;
  double small_duration = 1.0;
  int cap = 8;

  void validate() const;
};

// E[min(a, t_new)] for a fresh copy t_new ~ d.
double expected_min_with(double a, const ParetoDist& d);

// Expected machine time of one task (gamma = 1) when the scheduler first looks
// at it at an asktime uniform on [0, t] and duplicates it once if the
// remaining time exceeds sigma * E[x]. Both copies run until the earlier one
// finishes.
double expected_resource(double sigma, const ParetoDist& d);

struct EseSigmaOptimum {
  double sigma;
  double resource;
  bool at_boundary;
};

// Minimizes expected_resource over sigma in (0.1, 10].
EseSigmaOptimum optimal_sigma_ese(const ParetoDist& d);

// Copies per task for a small job: argmax over c in {1..cap} of
// -E[t](c) - gamma * m * c * E[min of c], ties to the smaller c.
int small_job_clone_count(int tasks, const ParetoDist& d, double gamma, int cap, double slot = 0.0,
                          double arrival = 0.0);

}  // namespace specexec

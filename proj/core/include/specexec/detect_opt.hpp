#pragma once

#include "specexec/dist.hpp"

namespace specexec {

// Straggler detection for one task. A task is flagged when, after running a
// fraction s of its duration t1, its remaining time (1 - s) t1 exceeds
// sigma * E[x]. Then c - 1 fresh copies are launched next to it.
struct DetectionParams {
  double sigma = 1.0 + 0.7071067811865476;
  double s = 0.25;
  int copies = 2;
  int cap = 8;

  void validate() const;
};

// Pr[(1 - s) t1 >= sigma E[x]].
double straggler_probability(double sigma, double s, const ParetoDist& d);

// E[c * d | straggler] where d = min((1 - s) t1, fresh copies) is the time the
// c running copies spend after detection.
double expected_straggler_cost(int copies, double sigma, double s, const ParetoDist& d);

// E[c d + s t1] over both branches, for a fixed copy count on detection.
double expected_task_cost(int copies, double sigma, double s, const ParetoDist& d);

// Argmin over c in {1..cap} of expected_straggler_cost, ties to the smaller c.
int optimal_c(double sigma, double s, const ParetoDist& d, int cap);

struct SigmaOptimum {
  double sigma;
  double cost;
  int copies;
  bool at_boundary;  // no interior minimum; sigma is the upper end
};

// Minimizes expected_task_cost(optimal_c(sigma), sigma) over sigma in (1, sigma_max].
SigmaOptimum optimal_sigma(double s, const ParetoDist& d, int cap, double sigma_max = 10.0);

}  // namespace specexec

#pragma once

#include <cstdint>
#include <vector>

#include "specexec/dist.hpp"

namespace specexec {

enum class ExpectationMethod { ClosedForm, Quadrature };

// E[flowtime] of a job whose m tasks all start at slot l with c copies each:
// E[max_j min_k t_jk] + (l - a). Copies may be fractional.
double job_flowtime_expectation(double tasks, double copies, const ParetoDist& d, double slot = 0.0,
                                double arrival = 0.0,
                                ExpectationMethod method = ExpectationMethod::ClosedForm);

// Expected machine time (resource / gamma) of m tasks with c copies each,
// m * c * Int (1 - F)^c dt.
double resource_expectation(double tasks, double copies, const ParetoDist& d,
                            ExpectationMethod method = ExpectationMethod::ClosedForm);

struct PendingJob {
  std::int64_t id;
  int tasks;
  double arrival;
  ParetoDist law;
};

// Jobs waiting at slot l for the cloning relaxation.
struct PendingBatch {
  double slot = 0.0;
  int available_machines = 0;
  std::vector<PendingJob> jobs;
  int copy_cap = 1;
  double gamma = 0.0;

  void validate() const;
  int total_tasks() const;
  bool eligible() const { return total_tasks() < available_machines; }
};

// Lagrange multipliers and the step/stop settings of the projected iteration.
struct DualState {
  double nu = 0.1;
  std::vector<double> xi;  // upper-bound multipliers, one per job
  std::vector<double> h;   // lower-bound multipliers, one per job
  double step_nu = 0.2;
  double step_xi = 0.3;
  double step_h = 0.4;
  double epsilon = 1e-4;
  int max_iterations = 10000;

  // Multipliers sized for `jobs` jobs, all set to `initial`.
  static DualState uniform(std::size_t jobs, double initial = 0.1);
};

struct DualIterate {
  std::vector<double> copies;
  double dual_value;
  double nu;
};

struct CloneAssignment {
  std::vector<double> continuous;
  std::vector<int> rounded;
  std::vector<double> dual_trace;
  std::vector<DualIterate> iterates;
  int iterations = 0;
  double final_nu = 0.0;
  std::vector<double> final_xi;
  std::vector<double> final_h;
};

// Per-job P2 objective term -E[t_i](c) - gamma * m_i * c * E[min of c].
double job_objective(const PendingJob& job, double copies, double slot, double gamma);

// Sum of job_objective over the batch (no constraints applied).
double primal_objective(const PendingBatch& batch, const std::vector<double>& copies);

double lagrangian(const PendingBatch& batch, const DualState& dual,
                  const std::vector<double>& copies);

// Projected gradient on the dual with per-job golden-section inner maxima over
// [1, r]. Throws std::invalid_argument for an ineligible batch and
// ConvergenceError (with the dual trace) at the iteration cap.
CloneAssignment solve_dual(const PendingBatch& batch, DualState dual);
CloneAssignment solve_dual(const PendingBatch& batch);

// Integer repair of a continuous solution: floor, then add copies to the job
// with the largest positive marginal gain while capacity permits.
std::vector<int> round_assignment(const PendingBatch& batch, const std::vector<double>& continuous);

struct GridOptimum {
  std::vector<double> copies;
  double objective;
};

// Exhaustive search over the grid {1, 1 + step, ..., r}^k subject to
// sum m c <= N. Refuses batches of more than 4 jobs.
GridOptimum brute_force_p2(const PendingBatch& batch, double grid_step);

}  // namespace specexec

#include "specexec/clone_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "specexec/errors.hpp"
#include "specexec/quadrature.hpp"

namespace specexec {

namespace {

void check_copies(double tasks, double copies, const ParetoDist& d) {
  if (!(tasks >= 1.0)) throw std::invalid_argument("task count must be >= 1");
  if (!(copies >= 1.0)) throw std::invalid_argument("copy count must be >= 1");
  if (copies * d.shape() <= 1.0)
    throw DivergingMomentError("expectation diverges: copies * shape = " +
                               std::to_string(copies * d.shape()) + " <= 1");
}

}  // namespace

double job_flowtime_expectation(double tasks, double copies, const ParetoDist& d, double slot,
                                double arrival, ExpectationMethod method) {
  check_copies(tasks, copies, d);
  const double tail = copies * d.shape();
  double longest = 0.0;
  if (method == ExpectationMethod::ClosedForm) {
    // Max of m iid Pareto(mu, tail): mu * Gamma(m + 1) Gamma(1 - 1/tail) / Gamma(m + 1 - 1/tail).
    const double inv = 1.0 / tail;
    longest = d.scale() *
              std::exp(std::lgamma(tasks + 1.0) + std::lgamma(1.0 - inv) - std::lgamma(tasks + 1.0 - inv));
  } else {
    const double mu = d.scale();
    const double shape = d.shape();
    auto not_done = [=](double t) {
      if (t < mu) return 1.0;
      const double single = std::pow(mu / t, shape * copies);  // (1 - F)^c
      return -std::expm1(tasks * std::log1p(-single));         // 1 - (1 - (1-F)^c)^m
    };
    const double edges[] = {mu};
    Quadrature q;
    q.rel_tol = 1e-10;
    longest = integrate(not_done, 0.0, kInfinity, q, edges);
  }
  return longest + slot - arrival;
}

double resource_expectation(double tasks, double copies, const ParetoDist& d,
                            ExpectationMethod method) {
  check_copies(tasks, copies, d);
  double per_copy = 0.0;
  if (method == ExpectationMethod::ClosedForm) {
    per_copy = d.expected_min(copies);
  } else {
    const double edges[] = {d.scale()};
    Quadrature q;
    q.rel_tol = 1e-10;
    per_copy = integrate([&](double t) { return std::pow(d.survival(t), copies); }, 0.0, kInfinity,
                         q, edges);
  }
  return tasks * copies * per_copy;
}

void PendingBatch::validate() const {
  if (available_machines < 0) throw std::invalid_argument("available machines must be >= 0");
  if (copy_cap < 1) throw std::invalid_argument("copy cap must be >= 1");
  if (!(gamma >= 0.0)) throw std::invalid_argument("resource rate must be nonnegative");
  for (const auto& job : jobs)
    if (job.tasks < 1)
      throw std::invalid_argument("job " + std::to_string(job.id) + " has no tasks");
}

int PendingBatch::total_tasks() const {
  int total = 0;
  for (const auto& job : jobs) total += job.tasks;
  return total;
}

DualState DualState::uniform(std::size_t jobs, double initial) {
  DualState s;
  s.nu = initial;
  s.xi.assign(jobs, initial);
  s.h.assign(jobs, initial);
  return s;
}

double job_objective(const PendingJob& job, double copies, double slot, double gamma) {
  return -job_flowtime_expectation(job.tasks, copies, job.law, slot, job.arrival) -
         gamma * resource_expectation(job.tasks, copies, job.law);
}

double primal_objective(const PendingBatch& batch, const std::vector<double>& copies) {
  if (copies.size() != batch.jobs.size())
    throw std::invalid_argument("copy vector length does not match the batch");
  double total = 0.0;
  for (std::size_t i = 0; i < copies.size(); ++i)
    total += job_objective(batch.jobs[i], copies[i], batch.slot, batch.gamma);
  return total;
}

double lagrangian(const PendingBatch& batch, const DualState& dual,
                  const std::vector<double>& copies) {
  const std::size_t n = batch.jobs.size();
  if (copies.size() != n || dual.xi.size() != n || dual.h.size() != n)
    throw std::invalid_argument("dual state and copy vector must match the batch size");
  double used = 0.0;
  double value = primal_objective(batch, copies);
  for (std::size_t i = 0; i < n; ++i) {
    used += batch.jobs[i].tasks * copies[i];
    value -= dual.xi[i] * (copies[i] - batch.copy_cap);
    value -= dual.h[i] * (1.0 - copies[i]);
  }
  value -= dual.nu * (used - batch.available_machines);
  return value;
}

CloneAssignment solve_dual(const PendingBatch& batch) {
  return solve_dual(batch, DualState::uniform(batch.jobs.size()));
}

CloneAssignment solve_dual(const PendingBatch& batch, DualState dual) {
  batch.validate();
  if (!batch.eligible())
    throw std::invalid_argument("batch needs " + std::to_string(batch.total_tasks()) +
                                " tasks < " + std::to_string(batch.available_machines) +
                                " available machines for cloning");
  const std::size_t n = batch.jobs.size();
  if (dual.xi.size() != n || dual.h.size() != n)
    throw std::invalid_argument("dual state must carry one xi and one h per job");
  if (!(dual.step_nu > 0.0 && dual.step_xi > 0.0 && dual.step_h > 0.0))
    throw std::invalid_argument("dual step sizes must be positive");
  if (dual.nu < 0.0) throw std::invalid_argument("multipliers must be nonnegative");

  const double cap = batch.copy_cap;
  const double machines = batch.available_machines;

  CloneAssignment out;
  std::vector<double> copies(n, 1.0);
  std::vector<double> inner(n, 0.0);

  // Step sizes start at the configured values and halve whenever the
  // corresponding subgradient changes sign.
  double step_nu = dual.step_nu;
  std::vector<double> step_xi(n, dual.step_xi);
  std::vector<double> step_h(n, dual.step_h);
  double prev_g_nu = 0.0;
  std::vector<double> prev_g_xi(n, 0.0);
  std::vector<double> prev_g_h(n, 0.0);

  for (int iter = 1; iter <= dual.max_iterations; ++iter) {
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const PendingJob& job = batch.jobs[i];
      const double linear = -dual.nu * job.tasks - dual.xi[i] + dual.h[i];
      auto negated = [&](double c) {
        return -(job_objective(job, c, batch.slot, batch.gamma) + linear * c);
      };
      const MinimizeResult best = golden_section_minimize(negated, 1.0, cap, 1e-10);
      next[i] = best.x;
      inner[i] = -best.value;
    }

    double dual_value = dual.nu * machines;
    double used = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dual_value += inner[i] + dual.xi[i] * cap - dual.h[i];
      used += batch.jobs[i].tasks * next[i];
    }
    out.dual_trace.push_back(dual_value);
    out.iterates.push_back({next, dual_value, dual.nu});

    double moved = 0.0;
    auto update = [&moved](double& value, double& step, double& prev, double grad) {
      if (grad * prev < 0.0) step *= 0.5;
      prev = grad;
      const double updated = std::max(0.0, value + step * grad);
      moved = std::max(moved, std::abs(updated - value));
      value = updated;
    };
    update(dual.nu, step_nu, prev_g_nu, used - machines);
    for (std::size_t i = 0; i < n; ++i) {
      update(dual.xi[i], step_xi[i], prev_g_xi[i], next[i] - cap);
      update(dual.h[i], step_h[i], prev_g_h[i], 1.0 - next[i]);
    }

    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - copies[i]));
    copies = std::move(next);
    out.iterations = iter;

    if (change < dual.epsilon && moved < dual.epsilon) {
      out.continuous = copies;
      out.rounded = round_assignment(batch, copies);
      out.final_nu = dual.nu;
      out.final_xi = dual.xi;
      out.final_h = dual.h;
      return out;
    }
  }
  throw ConvergenceError("dual iteration did not converge within " +
                             std::to_string(dual.max_iterations) + " iterations",
                         out.dual_trace);
}

std::vector<int> round_assignment(const PendingBatch& batch,
                                  const std::vector<double>& continuous) {
  const std::size_t n = batch.jobs.size();
  if (continuous.size() != n) throw std::invalid_argument("copy vector does not match the batch");
  std::vector<int> copies(n);
  long used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    copies[i] = std::clamp(static_cast<int>(std::floor(continuous[i] + 1e-9)), 1, batch.copy_cap);
    used += static_cast<long>(batch.jobs[i].tasks) * copies[i];
  }
  auto gain = [&](std::size_t i, int from, int to) {
    return job_objective(batch.jobs[i], to, batch.slot, batch.gamma) -
           job_objective(batch.jobs[i], from, batch.slot, batch.gamma);
  };
  auto before = [&](std::size_t a, std::size_t b) { return batch.jobs[a].id < batch.jobs[b].id; };

  // A slightly infeasible continuous point can floor to an infeasible integer
  // one; shed the copies that cost the least objective.
  while (used > batch.available_machines) {
    std::size_t pick = n;
    double best_loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (copies[i] <= 1) continue;
      const double loss = -gain(i, copies[i], copies[i] - 1);
      if (pick == n || loss < best_loss || (loss == best_loss && before(i, pick))) {
        pick = i;
        best_loss = loss;
      }
    }
    if (pick == n) break;
    --copies[pick];
    used -= batch.jobs[pick].tasks;
  }

  for (;;) {
    std::size_t pick = n;
    double best_gain = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (copies[i] >= batch.copy_cap) continue;
      if (used + batch.jobs[i].tasks > batch.available_machines) continue;
      const double g = gain(i, copies[i], copies[i] + 1);
      if (g <= 0.0) continue;
      if (pick == n || g > best_gain || (g == best_gain && before(i, pick))) {
        pick = i;
        best_gain = g;
      }
    }
    if (pick == n) break;
    ++copies[pick];
    used += batch.jobs[pick].tasks;
  }
  return copies;
}

GridOptimum brute_force_p2(const PendingBatch& batch, double grid_step) {
  batch.validate();
  const std::size_t n = batch.jobs.size();
  if (n > 4) throw std::invalid_argument("grid oracle refuses batches of more than 4 jobs");
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (n == 0) return {{}, 0.0};

  const int points = static_cast<int>(std::floor((batch.copy_cap - 1.0) / grid_step + 1e-9)) + 1;
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) grid[k] = std::min<double>(1.0 + k * grid_step, batch.copy_cap);

  std::vector<std::vector<double>> table(n, std::vector<double>(points));
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < points; ++k)
      table[i][k] = job_objective(batch.jobs[i], grid[k], batch.slot, batch.gamma);

  // Running best over a prefix of the last job's grid answers "best value with
  // at most this much capacity" in O(1).
  const std::size_t last = n - 1;
  std::vector<int> prefix_best(points);
  prefix_best[0] = 0;
  for (int k = 1; k < points; ++k)
    prefix_best[k] = table[last][k] > table[last][prefix_best[k - 1]] ? k : prefix_best[k - 1];

  const double machines = batch.available_machines + 1e-9;
  double best_value = -kInfinity;
  std::vector<int> best_index(n, -1);
  std::vector<int> index(n, 0);

  auto search = [&](auto&& self, std::size_t job, double used, double partial) -> void {
    const double tasks = batch.jobs[job].tasks;
    if (job == last) {
      const double room = (machines - used) / tasks;
      if (room < 1.0) return;
      const int reach = std::min(points - 1, static_cast<int>(std::floor((room - 1.0) / grid_step + 1e-9)));
      int k = prefix_best[reach];
      while (k > 0 && grid[k] * tasks + used > machines) k = prefix_best[k - 1];
      if (grid[k] * tasks + used > machines) return;
      const double value = partial + table[job][k];
      if (value > best_value) {
        best_value = value;
        index[job] = k;
        best_index = index;
      }
      return;
    }
    for (int k = 0; k < points; ++k) {
      const double next_used = used + tasks * grid[k];
      if (next_used > machines) break;
      index[job] = k;
      self(self, job + 1, next_used, partial + table[job][k]);
    }
  };
  search(search, 0, 0.0, 0.0);

  if (best_index[0] < 0) throw std::invalid_argument("no grid point satisfies the capacity constraint");
  GridOptimum out{std::vector<double>(n), best_value};
  for (std::size_t i = 0; i < n; ++i) out.copies[i] = grid[best_index[i]];
  return out;
}

}  // namespace specexec

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specexec/clone_opt.hpp"
#include "specexec/dist.hpp"
#include "specexec/metrics.hpp"

namespace specexec {

struct ClusterConfig {
  int machines = 300;
  double gamma = 0.01;
  double slot_length = 1.0;
  int copy_cap = 8;
  double horizon = 1500.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct JobSpec {
  std::int64_t id;
  double arrival;
  int tasks;
  ParetoDist law;
};

// Poisson job arrivals; each job draws its task count and the mean of its
// Pareto task law uniformly. A nonempty `jobs` list replaces the generator.
struct WorkloadSpec {
  double arrival_rate = 0.6;
  double shape = 2.0;
  int min_tasks = 1;
  int max_tasks = 100;
  double min_mean = 1.0;
  double max_mean = 4.0;
  std::vector<JobSpec> jobs;

  void validate() const;
};

// Jobs arriving in [0, horizon], in arrival order with ids 0, 1, ... Explicit
// jobs are sorted by arrival and renumbered the same way.
std::vector<JobSpec> generate_jobs(const WorkloadSpec& wl, double horizon, std::uint64_t seed);

// Duration of copy `copy` of task `task` of job `job`. A pure function of its
// arguments so every policy sees the same draws for the same copy.
double copy_duration(std::uint64_t seed, std::int64_t job, int task, int copy, const ParetoDist& law);

enum class CopyStatus { Running, Finished, Killed };

struct CopyState {
  double start;
  double duration;
  int machine;
  CopyStatus status = CopyStatus::Running;
  double end = 0.0;  // finish or kill instant once not running

  double finish_time() const { return start + duration; }
};

struct TaskState {
  std::int64_t job;
  int index;
  std::vector<CopyState> copies;
  bool completed = false;
  double completion = 0.0;
  int copy_events = 0;  // launch batches: 1 after first launch, 2 after one duplication

  bool launched() const { return !copies.empty(); }
  int running_copies() const;
  bool single_running() const { return !completed && copies.size() == 1; }
};

struct JobState {
  JobSpec spec;
  std::vector<TaskState> tasks;
  int next_unlaunched = 0;
  int unfinished = 0;
  std::optional<double> first_start;  // w_i
  std::optional<double> finish;
  double machine_time = 0.0;

  bool started() const { return next_unlaunched > 0; }
  bool done() const { return unfinished == 0; }
  int unlaunched() const { return static_cast<int>(tasks.size()) - next_unlaunched; }
  double remaining_workload() const { return unfinished * spec.law.mean(); }
};

struct CopyRef {
  std::int64_t job;
  int task;
  int copy;

  bool operator==(const CopyRef&) const = default;
};

struct Launch {
  std::int64_t job;
  int task;
  int copies;
  std::vector<int> machines;
};

struct PolicyDecision {
  std::vector<Launch> launches;
  std::vector<CopyRef> kills;
};

// What a policy sees at a slot boundary.
class ClusterView {
 public:
  ClusterView(double now, const ClusterConfig& cfg, std::span<const JobState> jobs,
              std::span<const std::int64_t> active, std::span<const int> idle,
              std::span<const CopyRef> running, RandomStream& rng)
      : now_(now), cfg_(cfg), jobs_(jobs), active_(active), idle_(idle), running_(running), rng_(rng) {}

  double now() const { return now_; }
  const ClusterConfig& config() const { return cfg_; }
  const JobState& job(std::int64_t id) const { return jobs_[static_cast<std::size_t>(id)]; }
  // Visible, unfinished jobs in id order.
  std::span<const std::int64_t> active() const { return active_; }
  std::span<const int> idle_machines() const { return idle_; }
  std::span<const CopyRef> running() const { return running_; }
  RandomStream& rng() const { return rng_; }

 private:
  double now_;
  const ClusterConfig& cfg_;
  std::span<const JobState> jobs_;
  std::span<const std::int64_t> active_;
  std::span<const int> idle_;
  std::span<const CopyRef> running_;
  RandomStream& rng_;
};

// Hands out idle machines while a policy assembles its decision.
class DecisionBuilder {
 public:
  explicit DecisionBuilder(const ClusterView& view);

  int idle() const { return static_cast<int>(pool_.size() - used_); }
  // Launches `copies` copies of the task on machines from the front of the
  // pool. Returns false (and launches nothing) if too few are idle.
  bool launch(std::int64_t job, int task, int copies);
  // Same, on machines drawn uniformly at random from the idle pool.
  bool launch_random(std::int64_t job, int task, int copies, RandomStream& rng);
  PolicyDecision take() { return std::move(decision_); }

 private:
  std::vector<int> pool_;
  std::size_t used_ = 0;
  PolicyDecision decision_;
};

struct SimCounters;

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void on_arrival(const JobState&) {}
  virtual PolicyDecision decide(const ClusterView& view) = 0;
  // Adds policy-side tallies (P2 solves, fallbacks) to the run counters.
  virtual void fill_counters(SimCounters&) const {}
};

enum class PolicyKind { NoSpec, Mantri, Sca, Sda, Ese };

struct PolicyParams {
  PolicyKind kind = PolicyKind::NoSpec;
  // Mantri
  double delta = 0.25;
  // SDA: sigma per job from the detection kernel when unset
  std::optional<double> sigma;
  double progress = 0.25;
  // ESE
  double ese_sigma = 1.7;
  double small_task_fraction = 0.1;
  double small_duration = 1.0;
  // SCA dual solver
  DualState dual;

  void validate() const;
};

const char* to_string(PolicyKind kind);
std::optional<PolicyKind> policy_kind_from_string(std::string_view name);

std::unique_ptr<Policy> make_policy(const PolicyParams& params, const ClusterConfig& cfg);

// Pr[t_rem > 2 t_new] for a task of law d that has run `elapsed`, t_new a
// fresh draw from d.
double mantri_duplicate_probability(const ParetoDist& d, double elapsed);

struct SimCounters {
  long launches = 0;       // copies started at a task's first launch
  long duplicates = 0;     // copies started on an already running task
  long kills = 0;
  long finishes = 0;
  int max_busy = 0;
  int max_copies_per_task = 0;
  int max_copy_events = 0;  // 2 means some task was duplicated once
  long p2_solves = 0;
  long p2_fallbacks = 0;
};

struct RunOptions {
  std::ostream* trace = nullptr;  // line-delimited JSON events
};

struct RunResult {
  MetricsReport report;
  SimCounters counters;
  std::vector<JobState> jobs;  // final state of every visible job
};

RunResult run(const ClusterConfig& cfg, const WorkloadSpec& wl, Policy& policy,
              const RunOptions& options = {});
RunResult run(const ClusterConfig& cfg, const WorkloadSpec& wl, const PolicyParams& params,
              const RunOptions& options = {});

}  // namespace specexec

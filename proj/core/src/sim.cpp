#include "specexec/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace specexec {

void ClusterConfig::validate() const {
  if (machines < 1) throw std::invalid_argument("cluster needs at least one machine");
  if (!(gamma >= 0.0)) throw std::invalid_argument("resource rate must be nonnegative");
  if (!(slot_length > 0.0)) throw std::invalid_argument("slot length must be positive");
  if (copy_cap < 1) throw std::invalid_argument("copy cap must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
}

void WorkloadSpec::validate() const {
  if (!(arrival_rate >= 0.0)) throw std::invalid_argument("arrival rate must be nonnegative");
  if (!(shape > 1.0)) throw std::invalid_argument("task-law shape must exceed 1");
  if (min_tasks < 1 || max_tasks < min_tasks) throw std::invalid_argument("invalid task-count range");
  if (!(min_mean > 0.0) || max_mean < min_mean)
    throw std::invalid_argument("invalid mean-duration range");
  for (const auto& j : jobs) {
    if (j.tasks < 1) throw std::invalid_argument("explicit job without tasks");
    if (!(j.arrival >= 0.0)) throw std::invalid_argument("explicit job with negative arrival");
  }
}

std::vector<JobSpec> generate_jobs(const WorkloadSpec& wl, double horizon, std::uint64_t seed) {
  wl.validate();
  std::vector<JobSpec> out;
  if (!wl.jobs.empty()) {
    out = wl.jobs;
    std::stable_sort(out.begin(), out.end(),
                     [](const JobSpec& a, const JobSpec& b) { return a.arrival < b.arrival; });
    std::erase_if(out, [&](const JobSpec& j) { return j.arrival > horizon; });
  } else if (wl.arrival_rate > 0.0) {
    RandomStream rng(seed);
    std::exponential_distribution<double> gap(wl.arrival_rate);
    std::uniform_int_distribution<int> tasks(wl.min_tasks, wl.max_tasks);
    std::uniform_real_distribution<double> mean(wl.min_mean, wl.max_mean);
    for (double t = gap(rng); t <= horizon; t += gap(rng)) {
      const int m = tasks(rng);
      const double x = mean(rng);
      out.push_back({0, t, m, ParetoDist::with_mean(x, wl.shape)});
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<std::int64_t>(i);
  return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double copy_duration(std::uint64_t seed, std::int64_t job, int task, int copy, const ParetoDist& law) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(job));
  h = splitmix(h ^ static_cast<std::uint64_t>(task));
  h = splitmix(h ^ static_cast<std::uint64_t>(copy));
  const double u = static_cast<double>(h >> 11) * 0x1p-53;
  return law.from_uniform(u);
}

int TaskState::running_copies() const {
  int n = 0;
  for (const auto& c : copies) n += c.status == CopyStatus::Running;
  return n;
}

DecisionBuilder::DecisionBuilder(const ClusterView& view)
    : pool_(view.idle_machines().begin(), view.idle_machines().end()) {}

bool DecisionBuilder::launch(std::int64_t job, int task, int copies) {
  if (copies < 1 || copies > idle()) return false;
  Launch l{job, task, copies, {}};
  for (int k = 0; k < copies; ++k) l.machines.push_back(pool_[used_++]);
  decision_.launches.push_back(std::move(l));
  return true;
}

bool DecisionBuilder::launch_random(std::int64_t job, int task, int copies, RandomStream& rng) {
  if (copies < 1 || copies > idle()) return false;
  Launch l{job, task, copies, {}};
  for (int k = 0; k < copies; ++k) {
    std::uniform_int_distribution<std::size_t> pick(used_, pool_.size() - 1);
    std::swap(pool_[used_], pool_[pick(rng)]);
    l.machines.push_back(pool_[used_++]);
  }
  decision_.launches.push_back(std::move(l));
  return true;
}

namespace {

struct Event {
  double time;
  std::int64_t job;
  int task;
  int copy;

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (job != o.job) return job > o.job;
    if (task != o.task) return task > o.task;
    return copy > o.copy;
  }
};

class Simulator {
 public:
  Simulator(const ClusterConfig& cfg, const WorkloadSpec& wl, Policy& policy, const RunOptions& opt)
      : cfg_(cfg), policy_(policy), trace_(opt.trace), specs_(generate_jobs(wl, cfg.horizon, cfg.seed)),
        busy_(static_cast<std::size_t>(cfg.machines)), policy_rng_(splitmix(cfg.seed ^ 0x5DEECE66DULL)) {
    jobs_.reserve(specs_.size());
  }

  RunResult run() {
    for (long slot = 0;; ++slot) {
      const double boundary = static_cast<double>(slot) * cfg_.slot_length;
      const double now = std::min(boundary, cfg_.horizon);
      advance(now);
      if (boundary >= cfg_.horizon) break;
      compact_active();
      if (next_arrival_ == specs_.size() && active_.empty()) break;
      decide(now);
    }
    return finalize();
  }

 private:
  void emit(double time, const char* event, std::int64_t job, int task, int copy, int machine) {
    if (!trace_) return;
    nlohmann::json rec = {{"time", time}, {"event", event}, {"job", job}};
    rec["task"] = task < 0 ? nlohmann::json(nullptr) : nlohmann::json(task);
    rec["copy"] = copy < 0 ? nlohmann::json(nullptr) : nlohmann::json(copy);
    rec["machine"] = machine < 0 ? nlohmann::json(nullptr) : nlohmann::json(machine);
    *trace_ << rec.dump() << '\n';
  }

  // Processes arrivals and completions up to and including `until`, in time order.
  void advance(double until) {
    for (;;) {
      const bool has_event = !events_.empty() && events_.top().time <= until;
      const bool has_arrival = next_arrival_ < specs_.size() && specs_[next_arrival_].arrival <= until;
      if (!has_event && !has_arrival) return;
      if (has_arrival && (!has_event || specs_[next_arrival_].arrival <= events_.top().time)) {
        arrive(specs_[next_arrival_++]);
      } else {
        const Event e = events_.top();
        events_.pop();
        complete(e);
      }
    }
  }

  void arrive(const JobSpec& spec) {
    JobState job{spec, {}, 0, spec.tasks, std::nullopt, std::nullopt, 0.0};
    job.tasks.reserve(static_cast<std::size_t>(spec.tasks));
    for (int j = 0; j < spec.tasks; ++j) job.tasks.push_back(TaskState{spec.id, j, {}});
    jobs_.push_back(std::move(job));
    active_.push_back(spec.id);
    emit(spec.arrival, "arrive", spec.id, -1, -1, -1);
    policy_.on_arrival(jobs_.back());
  }

  void stop_copy(JobState& job, TaskState& task, int copy, double time, CopyStatus status) {
    CopyState& c = task.copies[static_cast<std::size_t>(copy)];
    c.status = status;
    c.end = time;
    job.machine_time += time - c.start;
    busy_[static_cast<std::size_t>(c.machine)].reset();
    --busy_count_;
  }

  void complete(const Event& e) {
    JobState& job = jobs_[static_cast<std::size_t>(e.job)];
    TaskState& task = job.tasks[static_cast<std::size_t>(e.task)];
    if (task.copies[static_cast<std::size_t>(e.copy)].status != CopyStatus::Running) return;
    const int machine = task.copies[static_cast<std::size_t>(e.copy)].machine;
    stop_copy(job, task, e.copy, e.time, CopyStatus::Finished);
    ++counters_.finishes;
    emit(e.time, "finish", e.job, e.task, e.copy, machine);
    task.completed = true;
    task.completion = e.time;
    for (int k = 0; k < static_cast<int>(task.copies.size()); ++k) {
      if (task.copies[static_cast<std::size_t>(k)].status != CopyStatus::Running) continue;
      const int m = task.copies[static_cast<std::size_t>(k)].machine;
      stop_copy(job, task, k, e.time, CopyStatus::Killed);
      ++counters_.kills;
      emit(e.time, "kill", e.job, e.task, k, m);
    }
    if (--job.unfinished == 0) job.finish = e.time;
  }

  void compact_active() {
    std::erase_if(active_, [&](std::int64_t id) { return jobs_[static_cast<std::size_t>(id)].done(); });
  }

  void decide(double now) {
    std::vector<int> idle;
    std::vector<CopyRef> running;
    for (int m = 0; m < cfg_.machines; ++m) {
      const auto& slot = busy_[static_cast<std::size_t>(m)];
      if (slot) running.push_back(*slot);
      else idle.push_back(m);
    }
    if (idle.empty()) return;
    const ClusterView view(now, cfg_, jobs_, active_, idle, running, policy_rng_);
    apply(now, policy_.decide(view));
  }

  [[noreturn]] static void reject(const std::string& why) {
    throw std::logic_error("policy decision rejected: " + why);
  }

  void apply(double now, const PolicyDecision& d) {
    for (const auto& k : d.kills) {
      if (k.job < 0 || static_cast<std::size_t>(k.job) >= jobs_.size()) reject("kill of unknown job");
      JobState& job = jobs_[static_cast<std::size_t>(k.job)];
      if (k.task < 0 || k.task >= static_cast<int>(job.tasks.size())) reject("kill of unknown task");
      TaskState& task = job.tasks[static_cast<std::size_t>(k.task)];
      if (k.copy < 0 || k.copy >= static_cast<int>(task.copies.size()) ||
          task.copies[static_cast<std::size_t>(k.copy)].status != CopyStatus::Running)
        reject("kill of a copy that is not running");
      const int m = task.copies[static_cast<std::size_t>(k.copy)].machine;
      stop_copy(job, task, k.copy, now, CopyStatus::Killed);
      ++counters_.kills;
      emit(now, "kill", k.job, k.task, k.copy, m);
    }
    for (const auto& l : d.launches) {
      if (l.job < 0 || static_cast<std::size_t>(l.job) >= jobs_.size()) reject("launch for unknown job");
      JobState& job = jobs_[static_cast<std::size_t>(l.job)];
      if (job.done()) reject("launch for a finished job");
      if (l.task < 0 || l.task >= static_cast<int>(job.tasks.size())) reject("launch for unknown task");
      if (l.copies < 1 || l.copies != static_cast<int>(l.machines.size()))
        reject("copy count does not match machine list");
      TaskState& task = job.tasks[static_cast<std::size_t>(l.task)];
      const bool duplicate = task.launched();
      if (duplicate) {
        if (task.completed) reject("duplicate of a completed task");
      } else if (l.task != job.next_unlaunched) {
        reject("tasks of a job must be launched in index order");
      }
      if (static_cast<int>(task.copies.size()) + l.copies > cfg_.copy_cap) reject("copy cap exceeded");
      for (int m : l.machines) {
        if (m < 0 || m >= cfg_.machines) reject("unknown machine");
        if (busy_[static_cast<std::size_t>(m)]) reject("machine already busy");
        const int copy = static_cast<int>(task.copies.size());
        const double duration = copy_duration(cfg_.seed, l.job, l.task, copy, job.spec.law);
        task.copies.push_back({now, duration, m});
        busy_[static_cast<std::size_t>(m)] = CopyRef{l.job, l.task, copy};
        ++busy_count_;
        events_.push({now + duration, l.job, l.task, copy});
        emit(now, duplicate ? "duplicate" : "launch", l.job, l.task, copy, m);
        (duplicate ? counters_.duplicates : counters_.launches)++;
      }
      ++task.copy_events;
      if (!duplicate) {
        ++job.next_unlaunched;
        if (!job.first_start) job.first_start = now;
      }
      counters_.max_busy = std::max(counters_.max_busy, busy_count_);
      counters_.max_copies_per_task =
          std::max(counters_.max_copies_per_task, task.running_copies());
      counters_.max_copy_events = std::max(counters_.max_copy_events, task.copy_events);
    }
  }

  RunResult finalize() {
    const double end = cfg_.horizon;
    std::vector<JobRecord> records;
    int censored = 0;
    double censored_time = 0.0;
    for (auto& job : jobs_) {
      if (job.done()) {
        records.push_back({job.spec.id, job.spec.arrival, *job.finish, *job.finish - job.spec.arrival,
                           cfg_.gamma * job.machine_time, job.spec.tasks});
        continue;
      }
      // Copies still running at the horizon are charged up to it.
      double partial = job.machine_time;
      for (const auto& task : job.tasks)
        for (const auto& c : task.copies)
          if (c.status == CopyStatus::Running) partial += end - c.start;
      ++censored;
      censored_time += partial;
    }
    RunResult out;
    out.report = MetricsReport::build(policy_.name(), cfg_.gamma, std::move(records), censored,
                                      cfg_.gamma * censored_time);
    policy_.fill_counters(counters_);
    out.counters = counters_;
    out.jobs = std::move(jobs_);
    return out;
  }

  const ClusterConfig& cfg_;
  Policy& policy_;
  std::ostream* trace_;
  std::vector<JobSpec> specs_;
  std::size_t next_arrival_ = 0;
  std::vector<JobState> jobs_;
  std::vector<std::int64_t> active_;
  std::vector<std::optional<CopyRef>> busy_;
  int busy_count_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  RandomStream policy_rng_;
  SimCounters counters_;
};

}  // namespace

RunResult run(const ClusterConfig& cfg, const WorkloadSpec& wl, Policy& policy,
              const RunOptions& options) {
  cfg.validate();
  wl.validate();
  return Simulator(cfg, wl, policy, options).run();
}

RunResult run(const ClusterConfig& cfg, const WorkloadSpec& wl, const PolicyParams& params,
              const RunOptions& options) {
  params.validate();
  auto policy = make_policy(params, cfg);
  return run(cfg, wl, *policy, options);
}

}  // namespace specexec

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "specexec/sim.hpp"

using namespace specexec;

namespace {

ClusterConfig small_cluster(std::uint64_t seed = 1) {
  ClusterConfig c;
  c.machines = 60;
  c.horizon = 300;
  c.seed = seed;
  return c;
}

WorkloadSpec light_load() {
  WorkloadSpec w;
  w.arrival_rate = 0.3;
  w.max_tasks = 30;
  return w;
}

PolicyParams params(PolicyKind k) {
  PolicyParams p;
  p.kind = k;
  return p;
}

const PolicyKind kAll[] = {PolicyKind::NoSpec, PolicyKind::Mantri, PolicyKind::Sca, PolicyKind::Sda,
                           PolicyKind::Ese};

double copy_end(const CopyState& c, double horizon) {
  return c.status == CopyStatus::Running ? horizon : c.end;
}

// Wraps a policy and checks work conservation at every decision.
class ConservationProbe final : public Policy {
 public:
  explicit ConservationProbe(std::unique_ptr<Policy> inner) : inner_(std::move(inner)) {}
  std::string name() const override { return inner_->name(); }
  void on_arrival(const JobState& j) override { inner_->on_arrival(j); }
  PolicyDecision decide(const ClusterView& view) override {
    PolicyDecision d = inner_->decide(view);
    long unlaunched = 0;
    for (auto id : view.active()) unlaunched += view.job(id).unlaunched();
    long launched = 0;
    for (const auto& l : d.launches) launched += l.copies;
    const long idle = static_cast<long>(view.idle_machines().size());
    if (launched != std::min(idle, unlaunched)) ++violations;
    ++decisions;
    return d;
  }
  int violations = 0;
  int decisions = 0;

 private:
  std::unique_ptr<Policy> inner_;
};

}  // namespace

TEST(Generator, ZeroRateIsEmpty) {
  WorkloadSpec w;
  w.arrival_rate = 0.0;
  EXPECT_TRUE(generate_jobs(w, 100, 1).empty());
  const auto r = run(small_cluster(), w, params(PolicyKind::NoSpec));
  EXPECT_TRUE(r.report.jobs.empty());
  EXPECT_EQ(r.report.censored, 0);
  EXPECT_FALSE(r.report.mean_flowtime.has_value());
}

TEST(Generator, RespectsRanges) {
  WorkloadSpec w;
  w.arrival_rate = 2.0;
  const auto jobs = generate_jobs(w, 500, 3);
  ASSERT_GT(jobs.size(), 800u);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    EXPECT_EQ(jobs[i].id, static_cast<std::int64_t>(i));
    EXPECT_GE(jobs[i].tasks, 1);
    EXPECT_LE(jobs[i].tasks, 100);
    EXPECT_GE(jobs[i].law.mean(), 1.0 - 1e-12);
    EXPECT_LE(jobs[i].law.mean(), 4.0 + 1e-12);
    EXPECT_DOUBLE_EQ(jobs[i].law.shape(), 2.0);
    if (i) EXPECT_GE(jobs[i].arrival, jobs[i - 1].arrival);
  }
  // Poisson count: mean 1000, sd ~32
  EXPECT_NEAR(static_cast<double>(jobs.size()), 1000.0, 130.0);
}

TEST(Generator, ExplicitJobsSortedAndRenumbered) {
  WorkloadSpec w;
  w.jobs = {{7, 5.0, 2, ParetoDist(1, 2)}, {3, 1.0, 1, ParetoDist(1, 2)}};
  const auto jobs = generate_jobs(w, 100, 1);
  ASSERT_EQ(jobs.size(), 2u);
  EXPECT_EQ(jobs[0].id, 0);
  EXPECT_EQ(jobs[0].arrival, 1.0);
  EXPECT_EQ(jobs[1].tasks, 2);
}

TEST(CopyDuration, PureFunctionOfArguments) {
  const ParetoDist law(1, 2);
  EXPECT_EQ(copy_duration(5, 1, 2, 0, law), copy_duration(5, 1, 2, 0, law));
  EXPECT_NE(copy_duration(5, 1, 2, 0, law), copy_duration(5, 1, 2, 1, law));
  EXPECT_NE(copy_duration(5, 1, 2, 0, law), copy_duration(6, 1, 2, 0, law));
  EXPECT_GE(copy_duration(5, 1, 2, 0, law), 1.0);
}

TEST(CopyDuration, FollowsTaskLaw) {
  const ParetoDist law(1, 3);
  double sum = 0.0;
  const int n = 400'000;
  for (int i = 0; i < n; ++i) sum += copy_duration(11, i / 100, i % 100, 0, law);
  EXPECT_NEAR(sum / n, 1.5, 0.015);
}

TEST(Run, SingleTaskFlowtimeIsDurationPlusAlignment) {
  WorkloadSpec w;
  const ParetoDist law(1, 2);
  w.jobs = {{0, 0.3, 1, law}};
  const auto r = run(small_cluster(9), w, params(PolicyKind::NoSpec));
  ASSERT_EQ(r.report.jobs.size(), 1u);
  const double d = copy_duration(9, 0, 0, 0, law);
  EXPECT_NEAR(r.report.jobs[0].flowtime, d + 0.7, 1e-12);
  EXPECT_NEAR(r.report.jobs[0].resource, 0.01 * d, 1e-15);
}

TEST(Run, MachineConservation) {
  for (auto k : kAll) {
    const auto cfg = small_cluster(2);
    const auto r = run(cfg, light_load(), params(k));
    EXPECT_LE(r.counters.max_busy, cfg.machines) << to_string(k);
    std::map<int, std::vector<std::pair<double, double>>> per_machine;
    for (const auto& job : r.jobs)
      for (const auto& t : job.tasks)
        for (const auto& c : t.copies) per_machine[c.machine].push_back({c.start, copy_end(c, cfg.horizon)});
    for (auto& [m, spans] : per_machine) {
      std::sort(spans.begin(), spans.end());
      for (std::size_t i = 1; i < spans.size(); ++i)
        EXPECT_LE(spans[i - 1].second, spans[i].first) << to_string(k) << " machine " << m;
    }
  }
}

TEST(Run, CopyCaps) {
  for (auto k : kAll) {
    const auto cfg = small_cluster(3);
    const auto r = run(cfg, light_load(), params(k));
    EXPECT_LE(r.counters.max_copies_per_task, cfg.copy_cap) << to_string(k);
    if (k == PolicyKind::Mantri || k == PolicyKind::Sda || k == PolicyKind::Ese) {
      EXPECT_LE(r.counters.max_copies_per_task, 2) << to_string(k);
      EXPECT_LE(r.counters.max_copy_events, 2) << to_string(k);
    }
    if (k == PolicyKind::NoSpec) EXPECT_EQ(r.counters.duplicates, 0);
  }
}

TEST(Run, SpeculativePoliciesActuallySpeculate) {
  for (auto k : {PolicyKind::Mantri, PolicyKind::Sca, PolicyKind::Sda, PolicyKind::Ese}) {
    const auto r = run(small_cluster(4), light_load(), params(k));
    long copies = 0;
    long tasks = 0;
    for (const auto& j : r.jobs)
      for (const auto& t : j.tasks) {
        copies += static_cast<long>(t.copies.size());
        tasks += t.launched();
      }
    EXPECT_GT(copies, tasks) << to_string(k);
  }
}

TEST(Run, ResourceAccountingIdentity) {
  for (auto k : kAll) {
    const auto cfg = small_cluster(5);
    const auto r = run(cfg, light_load(), params(k));
    double machine_time = 0.0;
    for (const auto& job : r.jobs)
      for (const auto& t : job.tasks)
        for (const auto& c : t.copies) machine_time += copy_end(c, cfg.horizon) - c.start;
    EXPECT_NEAR(r.report.total_resource, cfg.gamma * machine_time, 1e-9 * machine_time) << to_string(k);
  }
}

TEST(Run, NoSpecResourceIsSumOfDurations) {
  const auto cfg = small_cluster(6);
  const auto r = run(cfg, light_load(), params(PolicyKind::NoSpec));
  std::map<std::int64_t, double> durations;
  for (const auto& job : r.jobs) {
    if (!job.done()) continue;
    double sum = 0.0;
    for (const auto& t : job.tasks) {
      ASSERT_EQ(t.copies.size(), 1u);
      sum += copy_duration(cfg.seed, job.spec.id, t.index, 0, job.spec.law);
    }
    durations[job.spec.id] = sum;
  }
  ASSERT_FALSE(r.report.jobs.empty());
  for (const auto& rec : r.report.jobs)
    EXPECT_NEAR(rec.resource, cfg.gamma * durations.at(rec.id), 1e-12 * rec.resource + 1e-15);
}

TEST(Run, WorkConservationUnderNoSpec) {
  auto cfg = small_cluster(7);
  cfg.machines = 20;  // saturated
  WorkloadSpec w = light_load();
  w.arrival_rate = 1.0;
  ConservationProbe probe(make_policy(params(PolicyKind::NoSpec), cfg));
  run(cfg, w, probe);
  EXPECT_GT(probe.decisions, 100);
  EXPECT_EQ(probe.violations, 0);
}

TEST(Run, FirstFinishSemantics) {
  for (auto k : {PolicyKind::Sca, PolicyKind::Mantri, PolicyKind::Ese}) {
    const auto r = run(small_cluster(8), light_load(), params(k));
    for (const auto& job : r.jobs)
      for (const auto& t : job.tasks) {
        if (!t.completed) continue;
        int finished = 0;
        double earliest = 1e300;
        for (const auto& c : t.copies) {
          earliest = std::min(earliest, c.finish_time());
          ASSERT_NE(c.status, CopyStatus::Running);
          if (c.status == CopyStatus::Finished) {
            ++finished;
            EXPECT_EQ(c.end, t.completion);
          } else {
            EXPECT_EQ(c.end, t.completion);  // siblings stop at the first finish
            EXPECT_GE(c.finish_time(), t.completion);
          }
        }
        EXPECT_EQ(finished, 1);
        EXPECT_DOUBLE_EQ(t.completion, earliest);
      }
  }
}

TEST(Run, FlowtimeDefinition) {
  const auto r = run(small_cluster(9), light_load(), params(PolicyKind::Sda));
  for (const auto& rec : r.report.jobs) {
    EXPECT_DOUBLE_EQ(rec.flowtime, rec.finish - rec.arrival);
    const auto& job = r.jobs[static_cast<std::size_t>(rec.id)];
    double first = 1e300;
    for (const auto& t : job.tasks) first = std::min(first, t.copies.front().start);
    EXPECT_EQ(*job.first_start, first);
  }
}

TEST(Run, SeedDeterminism) {
  for (auto k : kAll) {
    std::ostringstream t1;
    std::ostringstream t2;
    const auto a = run(small_cluster(10), light_load(), params(k), {&t1});
    const auto b = run(small_cluster(10), light_load(), params(k), {&t2});
    EXPECT_EQ(to_json(a.report), to_json(b.report)) << to_string(k);
    EXPECT_EQ(t1.str(), t2.str()) << to_string(k);
    const auto c = run(small_cluster(11), light_load(), params(k));
    EXPECT_NE(to_json(a.report), to_json(c.report)) << to_string(k);
  }
}

TEST(Run, CensoredJobsCounted) {
  auto cfg = small_cluster(12);
  cfg.horizon = 40;
  cfg.machines = 5;
  WorkloadSpec w = light_load();
  w.arrival_rate = 1.0;
  const auto r = run(cfg, w, params(PolicyKind::NoSpec));
  int unfinished = 0;
  for (const auto& j : r.jobs) unfinished += !j.done();
  EXPECT_GT(unfinished, 0);
  EXPECT_EQ(r.report.censored, unfinished);
  EXPECT_GT(r.report.censored_resource, 0.0);
}

TEST(Trace, EventsAreWellFormed) {
  std::ostringstream trace;
  const auto r = run(small_cluster(13), light_load(), params(PolicyKind::Mantri), {&trace});
  std::istringstream in(trace.str());
  std::string line;
  std::map<std::string, long> counts;
  double last = -1.0;
  while (std::getline(in, line)) {
    const auto e = nlohmann::json::parse(line);
    const std::string kind = e.at("event");
    ++counts[kind];
    EXPECT_GE(e.at("time").get<double>(), last);
    last = e.at("time").get<double>();
    if (kind == "arrive") {
      EXPECT_TRUE(e.at("task").is_null());
      EXPECT_TRUE(e.at("machine").is_null());
    } else {
      EXPECT_TRUE(e.at("machine").is_number_integer());
    }
  }
  EXPECT_EQ(counts["launch"], r.counters.launches);
  EXPECT_EQ(counts["duplicate"], r.counters.duplicates);
  EXPECT_EQ(counts["finish"], r.counters.finishes);
  EXPECT_EQ(counts["kill"], r.counters.kills);
  EXPECT_EQ(counts["arrive"], static_cast<long>(r.jobs.size()));
}

TEST(Run, RejectsBadDecisions) {
  class Greedy final : public Policy {
   public:
    std::string name() const override { return "greedy"; }
    PolicyDecision decide(const ClusterView& view) override {
      PolicyDecision d;
      for (auto id : view.active())
        if (view.job(id).unlaunched() > 1) d.launches.push_back({id, 1, 1, {view.idle_machines()[0]}});
      return d;
    }
  } greedy;
  WorkloadSpec w;
  w.jobs = {{0, 0.0, 3, ParetoDist(1, 2)}};
  EXPECT_THROW(run(small_cluster(), w, greedy), std::logic_error);
}

TEST(PolicyNames, RoundTrip) {
  for (auto k : kAll) EXPECT_EQ(policy_kind_from_string(to_string(k)), k);
  EXPECT_FALSE(policy_kind_from_string("hadoop").has_value());
}

TEST(PolicyParams, Validation) {
  PolicyParams p;
  p.delta = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.sigma = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "specexec/clone_opt.hpp"
#include "specexec/detect_opt.hpp"
#include "specexec/errors.hpp"
#include "specexec/ese_opt.hpp"
#include "specexec/quadrature.hpp"
#include "specexec/sim.hpp"

namespace specexec {

void PolicyParams::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (sigma && !(*sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(progress > 0.0 && progress < 1.0)) throw std::invalid_argument("progress fraction must lie in (0, 1)");
  if (!(ese_sigma > 0.0)) throw std::invalid_argument("ESE sigma must be positive");
  if (!(small_task_fraction > 0.0 && small_task_fraction <= 1.0))
    throw std::invalid_argument("small-job task fraction must lie in (0, 1]");
  if (!(small_duration > 0.0)) throw std::invalid_argument("small-job duration bound must be positive");
  if (!(dual.step_nu > 0.0 && dual.step_xi > 0.0 && dual.step_h > 0.0))
    throw std::invalid_argument("dual step sizes must be positive");
  if (!(dual.epsilon > 0.0)) throw std::invalid_argument("dual tolerance must be positive");
  if (dual.nu < 0.0) throw std::invalid_argument("initial multipliers must be nonnegative");
}

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::NoSpec: return "nospec";
    case PolicyKind::Mantri: return "mantri";
    case PolicyKind::Sca: return "sca";
    case PolicyKind::Sda: return "sda";
    case PolicyKind::Ese: return "ese";
  }
  return "?";
}

std::optional<PolicyKind> policy_kind_from_string(std::string_view name) {
  for (auto k : {PolicyKind::NoSpec, PolicyKind::Mantri, PolicyKind::Sca, PolicyKind::Sda, PolicyKind::Ese})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

double mantri_duplicate_probability(const ParetoDist& d, double elapsed) {
  const RemainingTimeLaw rest(d, elapsed);
  const double mu = d.scale();
  const double alpha = d.shape();
  auto integrand = [&](double w) {
    return rest.survival(2.0 * w) * alpha * std::pow(mu, alpha) / std::pow(w, alpha + 1.0);
  };
  Quadrature q;
  q.rel_tol = 1e-10;
  return integrate(integrand, mu, kInfinity, q);
}

namespace {

// Active jobs passing `keep`, smallest remaining workload first, ties by id.
template <class Keep>
std::vector<std::int64_t> by_workload(const ClusterView& view, Keep keep) {
  std::vector<std::int64_t> ids;
  for (auto id : view.active())
    if (keep(view.job(id))) ids.push_back(id);
  std::stable_sort(ids.begin(), ids.end(), [&](std::int64_t a, std::int64_t b) {
    return view.job(a).remaining_workload() < view.job(b).remaining_workload();
  });
  return ids;
}

bool has_unlaunched(const JobState& j) { return j.unlaunched() > 0; }
bool unstarted(const JobState& j) { return !j.started(); }
bool started_with_unlaunched(const JobState& j) { return j.started() && j.unlaunched() > 0; }

// One copy per unlaunched task, in job order, until machines run out.
void launch_singles(const ClusterView& view, DecisionBuilder& b, const std::vector<std::int64_t>& order) {
  for (auto id : order) {
    const JobState& job = view.job(id);
    for (int t = job.next_unlaunched; t < static_cast<int>(job.tasks.size()); ++t)
      if (!b.launch(id, t, 1)) return;
  }
}

// Running tasks that still have exactly their original copy.
std::vector<CopyRef> lone_copies(const ClusterView& view) {
  std::vector<CopyRef> out;
  for (const auto& ref : view.running()) {
    const TaskState& t = view.job(ref.job).tasks[static_cast<std::size_t>(ref.task)];
    if (t.copies.size() == 1) out.push_back(ref);
  }
  std::sort(out.begin(), out.end(), [](const CopyRef& a, const CopyRef& b) {
    return a.job != b.job ? a.job < b.job : a.task < b.task;
  });
  return out;
}

const CopyState& first_copy(const ClusterView& view, const CopyRef& ref) {
  return view.job(ref.job).tasks[static_cast<std::size_t>(ref.task)].copies.front();
}

class NoSpecPolicy final : public Policy {
 public:
  std::string name() const override { return "nospec"; }
  PolicyDecision decide(const ClusterView& view) override {
    DecisionBuilder b(view);
    launch_singles(view, b, by_workload(view, has_unlaunched));
    return b.take();
  }
};

class MantriPolicy final : public Policy {
 public:
  explicit MantriPolicy(double delta) : delta_(delta) {}
  std::string name() const override { return "mantri"; }

  PolicyDecision decide(const ClusterView& view) override {
    DecisionBuilder b(view);
    launch_singles(view, b, by_workload(view, has_unlaunched));
    if (b.idle() == 0 || view.config().copy_cap < 2) return b.take();

    // The probability depends on elapsed / scale only and grows with it, so
    // candidates are ranked by that ratio against a per-shape threshold.
    struct Candidate {
      CopyRef ref;
      double ratio;
    };
    std::vector<Candidate> candidates;
    for (const auto& ref : lone_copies(view)) {
      const ParetoDist& law = view.job(ref.job).spec.law;
      const double ratio = (view.now() - first_copy(view, ref).start) / law.scale();
      if (ratio > threshold_ratio(law.shape())) candidates.push_back({ref, ratio});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& c) { return a.ratio > c.ratio; });
    for (const auto& c : candidates)
      if (!b.launch(c.ref.job, c.ref.task, 1)) break;
    return b.take();
  }

 private:
  double threshold_ratio(double shape) {
    auto it = thresholds_.find(shape);
    if (it != thresholds_.end()) return it->second;
    const ParetoDist unit(1.0, shape);
    auto excess = [&](double ratio) { return mantri_duplicate_probability(unit, ratio) - delta_; };
    double lo = 0.0;
    double hi = 1.0;
    double found = 0.0;
    if (excess(lo) <= 0.0) {
      while (excess(hi) <= 0.0) hi *= 2.0;
      for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? hi : lo) = mid;
      }
      found = lo;
    } else {
      found = -1.0;  // every running task qualifies
    }
    thresholds_.emplace(shape, found);
    return found;
  }

  double delta_;
  std::map<double, double> thresholds_;
};

class ScaPolicy final : public Policy {
 public:
  explicit ScaPolicy(DualState dual) : dual_(std::move(dual)) {}
  std::string name() const override { return "sca"; }

  PolicyDecision decide(const ClusterView& view) override {
    DecisionBuilder b(view);
    launch_singles(view, b, by_workload(view, started_with_unlaunched));
    if (b.idle() == 0) return b.take();

    const auto pending = by_workload(view, unstarted);
    if (pending.empty()) return b.take();
    PendingBatch batch;
    batch.slot = view.now();
    batch.available_machines = b.idle();
    batch.copy_cap = view.config().copy_cap;
    batch.gamma = view.config().gamma;
    for (auto id : pending) {
      const JobState& j = view.job(id);
      batch.jobs.push_back({id, j.spec.tasks, j.spec.arrival, j.spec.law});
    }
    if (!batch.eligible()) {
      launch_singles(view, b, pending);
      return b.take();
    }

    DualState dual = dual_;
    dual.xi.assign(batch.jobs.size(), dual_.nu);
    dual.h.assign(batch.jobs.size(), dual_.nu);
    std::vector<int> copies;
    try {
      ++solves_;
      copies = solve_dual(batch, dual).rounded;
    } catch (const ConvergenceError&) {
      ++fallbacks_;
      copies.assign(batch.jobs.size(), 1);
    }
    for (std::size_t i = 0; i < pending.size(); ++i)
      for (int t = 0; t < batch.jobs[i].tasks; ++t) b.launch(pending[i], t, copies[i]);
    return b.take();
  }

  void fill_counters(SimCounters& c) const override {
    c.p2_solves += solves_;
    c.p2_fallbacks += fallbacks_;
  }

 private:
  DualState dual_;
  long solves_ = 0;
  long fallbacks_ = 0;
};

class SdaPolicy final : public Policy {
 public:
  SdaPolicy(std::optional<double> sigma, double progress, int cap)
      : sigma_(sigma), progress_(progress), cap_(cap) {}
  std::string name() const override { return "sda"; }

  void on_arrival(const JobState& job) override {
    const double shape = job.spec.law.shape();
    auto it = per_shape_.find(shape);
    if (it == per_shape_.end()) {
      // sigma* and the copy count do not depend on the scale, so one unit law
      // per shape serves every job.
      const ParetoDist unit(1.0, shape);
      const double sigma = sigma_ ? *sigma_ : optimal_sigma(progress_, unit, cap_).sigma;
      it = per_shape_.emplace(shape, Setting{sigma, optimal_c(sigma, progress_, unit, cap_)}).first;
    }
    settings_.resize(static_cast<std::size_t>(job.spec.id) + 1);
    settings_[static_cast<std::size_t>(job.spec.id)] = it->second;
  }

  PolicyDecision decide(const ClusterView& view) override {
    DecisionBuilder b(view);
    // Level 1: duplicate detected stragglers.
    for (const auto& ref : lone_copies(view)) {
      if (b.idle() == 0) break;
      const Setting& set = settings_[static_cast<std::size_t>(ref.job)];
      if (set.copies < 2) continue;
      const CopyState& c = first_copy(view, ref);
      if (view.now() < c.start + progress_ * c.duration) continue;  // not yet at progress s
      if ((1.0 - progress_) * c.duration <= set.sigma * view.job(ref.job).spec.law.mean()) continue;
      b.launch_random(ref.job, ref.task, std::min(set.copies - 1, b.idle()), view.rng());
    }
    // Level 2: started jobs; level 3: new jobs.
    launch_singles(view, b, by_workload(view, started_with_unlaunched));
    launch_singles(view, b, by_workload(view, unstarted));
    return b.take();
  }

 private:
  struct Setting {
    double sigma = 0.0;
    int copies = 1;
  };
  std::optional<double> sigma_;
  double progress_;
  int cap_;
  std::map<double, Setting> per_shape_;
  std::vector<Setting> settings_;
};

class EsePolicy final : public Policy {
 public:
  EsePolicy(double sigma, double small_fraction, double small_duration)
      : sigma_(sigma), small_fraction_(small_fraction), small_duration_(small_duration) {}
  std::string name() const override { return "ese"; }

  PolicyDecision decide(const ClusterView& view) override {
    DecisionBuilder b(view);
    const ClusterConfig& cfg = view.config();

    // D(l): lone copies whose expected remaining time exceeds sigma E[x],
    // longest expected remainder first.
    if (cfg.copy_cap >= 2) {
      struct Candidate {
        CopyRef ref;
        double remaining;
      };
      std::vector<Candidate> d;
      for (const auto& ref : lone_copies(view)) {
        const ParetoDist& law = view.job(ref.job).spec.law;
        const double rem = remaining_time_law(law, view.now() - first_copy(view, ref).start).expected();
        if (rem > sigma_ * law.mean()) d.push_back({ref, rem});
      }
      std::stable_sort(d.begin(), d.end(),
                       [](const Candidate& a, const Candidate& c) { return a.remaining > c.remaining; });
      for (const auto& c : d)
        if (!b.launch(c.ref.job, c.ref.task, 1)) break;
    }

    // R(l): started, unfinished jobs.
    launch_singles(view, b, by_workload(view, started_with_unlaunched));

    // chi(l): new jobs; small ones get the cloning rule.
    const auto pending = by_workload(view, unstarted);
    if (pending.empty() || b.idle() == 0) return b.take();
    const double small_tasks = small_fraction_ * b.idle() / static_cast<double>(pending.size());
    for (auto id : pending) {
      if (b.idle() == 0) break;
      const JobState& job = view.job(id);
      const int m = job.spec.tasks;
      int copies = 1;
      if (m < small_tasks && job.spec.law.mean() < small_duration_) {
        copies = small_job_clone_count(m, job.spec.law, cfg.gamma, cfg.copy_cap, view.now(),
                                       job.spec.arrival);
        copies = std::min(copies, b.idle() / m);
      }
      if (copies >= 2) {
        for (int t = 0; t < m; ++t) b.launch(id, t, copies);
      } else {
        launch_singles(view, b, {id});
      }
    }
    return b.take();
  }

 private:
  double sigma_;
  double small_fraction_;
  double small_duration_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicyParams& p, const ClusterConfig& cfg) {
  p.validate();
  switch (p.kind) {
    case PolicyKind::NoSpec: return std::make_unique<NoSpecPolicy>();
    case PolicyKind::Mantri: return std::make_unique<MantriPolicy>(p.delta);
    case PolicyKind::Sca: return std::make_unique<ScaPolicy>(p.dual);
    case PolicyKind::Sda: return std::make_unique<SdaPolicy>(p.sigma, p.progress, cfg.copy_cap);
    case PolicyKind::Ese:
      return std::make_unique<EsePolicy>(p.ese_sigma, p.small_task_fraction, p.small_duration);
  }
  throw std::invalid_argument("unknown policy");
}

}  // namespace specexec

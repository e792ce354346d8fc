#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace specexec::cli {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Typed access to YAML/JSON nodes with line-numbered errors.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    throw ConfigError(source_, at.Mark().line + 1, message);
  }

  YAML::Node root(const std::string& text) const {
    try {
      YAML::Node n = YAML::Load(text);
      if (!n.IsMap()) throw ConfigError(source_, 1, "top level must be an object");
      return n;
    } catch (const YAML::ParserException& e) {
      throw ConfigError(source_, e.mark.line + 1, "syntax error: " + e.msg);
    }
  }

  void only(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& where) const {
    if (!map.IsMap()) fail(map, where + " must be an object");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        fail(kv.first, "unknown field '" + key + "' in " + where);
    }
  }

  YAML::Node child(const YAML::Node& map, const char* key, const std::string& where) const {
    YAML::Node n = map[key];
    if (!n) fail(map, "missing field '" + std::string(key) + "' in " + where);
    return n;
  }

  template <class T>
  T as(const YAML::Node& n, const std::string& what) const {
    try {
      if (!n.IsScalar()) fail(n, what + " must be a scalar");
      return n.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(n, what + " has the wrong type");
    }
  }

  template <class T>
  T field(const YAML::Node& map, const char* key, const std::string& where) const {
    return as<T>(child(map, key, where), where + "." + key);
  }

  template <class T>
  T field_or(const YAML::Node& map, const char* key, T fallback, const std::string& where) const {
    YAML::Node n = map[key];
    return n ? as<T>(n, where + "." + key) : fallback;
  }

  template <class T>
  std::vector<T> list(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list");
    std::vector<T> out;
    for (const auto& e : n) out.push_back(as<T>(e, what + " entry"));
    return out;
  }

  // [lo, hi] pair
  template <class T>
  std::pair<T, T> range(const YAML::Node& map, const char* key, const std::string& where) const {
    const YAML::Node n = child(map, key, where);
    const auto v = list<T>(n, where + "." + key);
    if (v.size() != 2 || v[1] < v[0]) fail(n, where + "." + key + " must be [low, high] with low <= high");
    return {v[0], v[1]};
  }

  // Runs a module's validate() and reports its complaint at `at`.
  template <class F>
  void check(const YAML::Node& at, F&& validate) const {
    try {
      validate();
    } catch (const std::invalid_argument& e) {
      fail(at, e.what());
    }
  }

 private:
  std::string source_;
};

DualState parse_dual(const Reader& r, const YAML::Node& n, const std::string& where) {
  r.only(n, {"nu", "xi", "h", "step_nu", "step_xi", "step_h", "epsilon", "max_iterations"}, where);
  DualState d;
  d.nu = r.field_or<double>(n, "nu", d.nu, where);
  const double xi = r.field_or<double>(n, "xi", d.nu, where);
  const double h = r.field_or<double>(n, "h", d.nu, where);
  d.xi.assign(1, xi);
  d.h.assign(1, h);
  d.step_nu = r.field_or<double>(n, "step_nu", d.step_nu, where);
  d.step_xi = r.field_or<double>(n, "step_xi", d.step_xi, where);
  d.step_h = r.field_or<double>(n, "step_h", d.step_h, where);
  d.epsilon = r.field_or<double>(n, "epsilon", d.epsilon, where);
  d.max_iterations = r.field_or<int>(n, "max_iterations", d.max_iterations, where);
  if (!(d.nu >= 0.0 && xi >= 0.0 && h >= 0.0)) r.fail(n, where + ": multipliers must be nonnegative");
  if (!(d.step_nu > 0.0 && d.step_xi > 0.0 && d.step_h > 0.0))
    r.fail(n, where + ": step sizes must be positive");
  if (!(d.epsilon > 0.0) || d.max_iterations < 1) r.fail(n, where + ": invalid stop settings");
  return d;
}

PolicySpec parse_policy(const Reader& r, const YAML::Node& n, const std::string& where) {
  if (!n.IsMap()) r.fail(n, where + " must be an object");
  const YAML::Node name_node = r.child(n, "name", where);
  const auto name = r.as<std::string>(name_node, where + ".name");
  const auto kind = policy_kind_from_string(name);
  if (!kind)
    r.fail(name_node, where + ".name: unknown policy '" + name + "' (expected nospec, mantri, sca, sda or ese)");
  PolicySpec spec;
  spec.label = r.field_or<std::string>(n, "label", name, where);
  PolicyParams& p = spec.params;
  p.kind = *kind;
  switch (*kind) {
    case PolicyKind::NoSpec:
      r.only(n, {"name", "label"}, where);
      break;
    case PolicyKind::Mantri:
      r.only(n, {"name", "label", "delta"}, where);
      p.delta = r.field_or<double>(n, "delta", p.delta, where);
      break;
    case PolicyKind::Sca:
      r.only(n, {"name", "label", "dual"}, where);
      if (n["dual"]) p.dual = parse_dual(r, n["dual"], where + ".dual");
      break;
    case PolicyKind::Sda: {
      r.only(n, {"name", "label", "sigma", "progress"}, where);
      const YAML::Node sigma = n["sigma"];
      if (sigma && !(sigma.IsScalar() && sigma.as<std::string>() == "auto"))
        p.sigma = r.as<double>(sigma, where + ".sigma");
      p.progress = r.field_or<double>(n, "progress", p.progress, where);
      break;
    }
    case PolicyKind::Ese:
      r.only(n, {"name", "label", "sigma", "eta", "xi_dur"}, where);
      p.ese_sigma = r.field_or<double>(n, "sigma", p.ese_sigma, where);
      p.small_task_fraction = r.field_or<double>(n, "eta", p.small_task_fraction, where);
      p.small_duration = r.field_or<double>(n, "xi_dur", p.small_duration, where);
      break;
  }
  r.check(n, [&] { p.validate(); });
  return spec;
}

}  // namespace

WorkloadProfile ExperimentConfig::threshold_profile() const {
  if (threshold) return *threshold;
  if (arrival_rates.empty()) throw std::invalid_argument("no arrival rate to derive a profile from");
  const double mean_tasks = 0.5 * (workload.min_tasks + workload.max_tasks);
  const double mean_duration = 0.5 * (workload.min_mean + workload.max_mean);
  return {arrival_rates.front(), mean_tasks, ParetoDist::with_mean(mean_duration, workload.shape),
          cluster.machines};
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  const YAML::Node root = r.root(text);
  r.only(root, {"cluster", "workload", "policies", "seeds", "output", "threshold"}, "config");
  ExperimentConfig cfg;

  const YAML::Node cluster = r.child(root, "cluster", "config");
  r.only(cluster, {"machines", "gamma", "slot_length", "copy_cap", "horizon"}, "cluster");
  cfg.cluster.machines = r.field<int>(cluster, "machines", "cluster");
  cfg.cluster.gamma = r.field<double>(cluster, "gamma", "cluster");
  cfg.cluster.slot_length = r.field_or<double>(cluster, "slot_length", 1.0, "cluster");
  cfg.cluster.copy_cap = r.field<int>(cluster, "copy_cap", "cluster");
  cfg.cluster.horizon = r.field<double>(cluster, "horizon", "cluster");
  r.check(cluster, [&] { cfg.cluster.validate(); });

  const YAML::Node wl = r.child(root, "workload", "config");
  r.only(wl, {"arrival_rates", "shape", "tasks", "mean_duration", "jobs"}, "workload");
  const YAML::Node rates = r.child(wl, "arrival_rates", "workload");
  cfg.arrival_rates = r.list<double>(rates, "workload.arrival_rates");
  if (cfg.arrival_rates.empty()) r.fail(rates, "workload.arrival_rates must not be empty");
  for (double rate : cfg.arrival_rates)
    if (!(rate >= 0.0)) r.fail(rates, "workload.arrival_rates entries must be nonnegative");
  cfg.workload.shape = r.field<double>(wl, "shape", "workload");
  std::tie(cfg.workload.min_tasks, cfg.workload.max_tasks) = r.range<int>(wl, "tasks", "workload");
  std::tie(cfg.workload.min_mean, cfg.workload.max_mean) = r.range<double>(wl, "mean_duration", "workload");
  if (const YAML::Node jobs = wl["jobs"]) {
    if (!jobs.IsSequence()) r.fail(jobs, "workload.jobs must be a list");
    for (const auto& j : jobs) {
      r.only(j, {"arrival", "tasks", "mean"}, "workload.jobs entry");
      const double mean = r.field<double>(j, "mean", "workload.jobs entry");
      if (!(mean > 0.0)) r.fail(j, "workload.jobs entry: mean must be positive");
      if (!(cfg.workload.shape > 1.0)) r.fail(wl, "workload.shape must exceed 1");
      cfg.workload.jobs.push_back({0, r.field<double>(j, "arrival", "workload.jobs entry"),
                                   r.field<int>(j, "tasks", "workload.jobs entry"),
                                   ParetoDist::with_mean(mean, cfg.workload.shape)});
    }
  }
  r.check(wl, [&] { cfg.workload.validate(); });

  const YAML::Node policies = r.child(root, "policies", "config");
  if (!policies.IsSequence() || policies.size() == 0) r.fail(policies, "policies must be a nonempty list");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    auto spec = parse_policy(r, policies[i], "policies[" + std::to_string(i) + "]");
    if (!labels.insert(spec.label).second)
      r.fail(policies[i], "duplicate policy label '" + spec.label + "'");
    cfg.policies.push_back(std::move(spec));
  }

  const YAML::Node seeds = r.child(root, "seeds", "config");
  cfg.seeds = r.list<std::uint64_t>(seeds, "seeds");
  if (cfg.seeds.empty()) r.fail(seeds, "seeds must contain at least one seed");

  cfg.output_dir = r.field_or<std::string>(root, "output", cfg.output_dir, "config");

  if (const YAML::Node t = root["threshold"]) {
    r.only(t, {"arrival_rate", "mean_tasks", "scale", "shape", "machines"}, "threshold");
    const double scale = r.field<double>(t, "scale", "threshold");
    const double shape = r.field<double>(t, "shape", "threshold");
    if (!(scale > 0.0 && shape > 1.0)) r.fail(t, "threshold: scale must be positive and shape > 1");
    WorkloadProfile p{r.field<double>(t, "arrival_rate", "threshold"),
                      r.field<double>(t, "mean_tasks", "threshold"), ParetoDist(scale, shape),
                      r.field<int>(t, "machines", "threshold")};
    r.check(t, [&] { p.validate(); });
    cfg.threshold = p;
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path), path);
}

BatchConfig parse_batch_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  const YAML::Node root = r.root(text);
  r.only(root, {"slot", "available_machines", "copy_cap", "gamma", "dual", "jobs"}, "batch");
  BatchConfig out;
  PendingBatch& b = out.batch;
  b.slot = r.field_or<double>(root, "slot", 0.0, "batch");
  b.available_machines = r.field<int>(root, "available_machines", "batch");
  b.copy_cap = r.field<int>(root, "copy_cap", "batch");
  b.gamma = r.field<double>(root, "gamma", "batch");
  const YAML::Node jobs = r.child(root, "jobs", "batch");
  if (!jobs.IsSequence()) r.fail(jobs, "batch.jobs must be a list");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const YAML::Node j = jobs[i];
    const std::string where = "batch.jobs[" + std::to_string(i) + "]";
    r.only(j, {"id", "tasks", "arrival", "scale", "shape"}, where);
    const double scale = r.field<double>(j, "scale", where);
    const double shape = r.field<double>(j, "shape", where);
    if (!(scale > 0.0 && shape > 1.0)) r.fail(j, where + ": scale must be positive and shape > 1");
    b.jobs.push_back({r.field_or<std::int64_t>(j, "id", static_cast<std::int64_t>(i), where),
                      r.field<int>(j, "tasks", where), r.field_or<double>(j, "arrival", 0.0, where),
                      ParetoDist(scale, shape)});
  }
  r.check(root, [&] { b.validate(); });
  out.dual = root["dual"] ? parse_dual(r, root["dual"], "batch.dual") : DualState{};
  const double xi = out.dual.xi.empty() ? out.dual.nu : out.dual.xi.front();
  const double h = out.dual.h.empty() ? out.dual.nu : out.dual.h.front();
  out.dual.xi.assign(b.jobs.size(), xi);
  out.dual.h.assign(b.jobs.size(), h);
  return out;
}

BatchConfig load_batch_config(const std::string& path) { return parse_batch_config(read_file(path), path); }

}  // namespace specexec::cli

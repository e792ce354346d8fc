#include "driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "specexec/ese_opt.hpp"

namespace specexec::cli {

using nlohmann::json;

std::string Cell::stem() const {
  char rate[64];
  std::snprintf(rate, sizeof rate, "%g", arrival_rate);
  return label + "_lambda" + rate + "_seed" + std::to_string(seed);
}

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (double rate : cfg.arrival_rates)
    for (const auto& p : cfg.policies)
      for (auto seed : cfg.seeds) cells.push_back({p.label, rate, seed, p.params});
  return cells;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

CellResult run_cell(const ExperimentConfig& cfg, const Cell& cell, const DriverOptions& opt) {
  ClusterConfig cluster = cfg.cluster;
  cluster.seed = cell.seed;
  WorkloadSpec wl = cfg.workload;
  wl.arrival_rate = cell.arrival_rate;
  const auto base = opt.out_dir / cell.stem();

  std::ofstream trace;
  RunOptions run_opt;
  if (opt.trace) {
    trace.open(base.string() + "_trace.jsonl", std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write trace for " + cell.stem());
    run_opt.trace = &trace;
  }
  RunResult r = run(cluster, wl, cell.params, run_opt);
  r.report.policy = cell.label;

  write_text(base.string() + ".json", to_json(r.report) + "\n");
  std::ofstream jobs(base.string() + "_jobs.csv", std::ios::binary);
  write_jobs_csv(jobs, r.report);
  std::ofstream flow(base.string() + "_flowtime_cdf.csv", std::ios::binary);
  write_cdf_csv(flow, r.report.flowtime_cdf);
  std::ofstream res(base.string() + "_resource_cdf.csv", std::ios::binary);
  write_cdf_csv(res, r.report.resource_cdf);
  return {cell, std::move(r.report), r.counters};
}

}  // namespace

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, const DriverOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  const auto cells = expand_cells(cfg);
  std::vector<std::optional<CellResult>> slots(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed) return;
      try {
        slots[i] = run_cell(cfg, cells[i], opt);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::vector<CellResult> results;
  for (auto& s : slots) results.push_back(std::move(*s));
  std::ofstream summary(opt.out_dir / "summary.csv", std::ios::binary);
  write_summary_csv(summary, results);
  return results;
}

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& results) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  out << "policy,lambda,seed,finished,censored,mean_flowtime,p80_flowtime,total_resource,"
         "utility_minus_resource,duplicates\n";
  for (const auto& r : results)
    out << r.cell.label << ',' << format_number(r.cell.arrival_rate) << ',' << r.cell.seed << ','
        << r.report.jobs.size() << ',' << r.report.censored << ',' << opt(r.report.mean_flowtime) << ','
        << opt(r.report.p80_flowtime) << ',' << format_number(r.report.total_resource) << ','
        << format_number(r.report.utility_minus_resource) << ',' << r.counters.duplicates << '\n';
}

std::string regime_report_json(const WorkloadProfile& p, const RegimeReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json out = {
      {"schema_version", 1},
      {"profile",
       {{"arrival_rate", p.arrival_rate},
        {"mean_tasks", p.mean_tasks},
        {"scale", p.task_law.scale()},
        {"shape", p.task_law.shape()},
        {"machines", p.machines}}},
      {"omega", r.omega},
      {"omega_upper", r.omega_upper},
      {"lambda_upper", r.lambda_upper},
      {"feasibility_bound", r.feasibility_bound},
      {"kind", to_string(r.kind)},
      {"cloning_feasible", r.cloning_feasible},
      {"delay_no_spec", opt(r.delay_no_spec)},
      {"delay_clone", opt(r.delay_clone)},
  };
  return out.dump(2);
}

std::string assignment_json(const PendingBatch& batch, const CloneAssignment& a, bool with_trace) {
  json jobs = json::array();
  for (std::size_t i = 0; i < batch.jobs.size(); ++i)
    jobs.push_back({{"id", batch.jobs[i].id},
                    {"tasks", batch.jobs[i].tasks},
                    {"continuous", a.continuous[i]},
                    {"rounded", a.rounded[i]}});
  json out = {
      {"schema_version", 1},
      {"iterations", a.iterations},
      {"objective", primal_objective(batch, a.continuous)},
      {"dual_value", a.dual_trace.empty() ? 0.0 : a.dual_trace.back()},
      {"nu", a.final_nu},
      {"jobs", jobs},
  };
  if (with_trace) out["dual_trace"] = a.dual_trace;
  return out.dump(2);
}

void write_p2_trace_csv(std::ostream& out, const CloneAssignment& a) {
  out << "iteration,dual_value";
  for (std::size_t i = 0; i < a.continuous.size(); ++i) out << ",c" << (i + 1);
  out << '\n';
  for (std::size_t k = 0; k < a.iterates.size(); ++k) {
    out << (k + 1) << ',' << format_number(a.iterates[k].dual_value);
    for (double c : a.iterates[k].copies) out << ',' << format_number(c);
    out << '\n';
  }
}

std::vector<double> sweep_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("grid must satisfy lo <= hi and step > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    out.push_back(std::round(v * 1e10) / 1e10);  // drop accumulated binary noise
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepOptions& o) {
  const ParetoDist d(o.scale, o.alpha);
  const auto grid = sweep_grid(o.lo, o.hi, o.step);
  if (o.model == SweepModel::Detect) {
    out << "sigma,expected_cost,optimal_c,analysed\n";
    for (double sigma : grid) {
      const int c = optimal_c(sigma, o.progress, d, o.cap);
      out << format_number(sigma) << ',' << format_number(expected_task_cost(c, sigma, o.progress, d))
          << ',' << c << ',' << (sigma > 1.0 ? 1 : 0) << '\n';
    }
  } else {
    out << "sigma,resource_ratio\n";
    for (double sigma : grid)
      out << format_number(sigma) << ',' << format_number(expected_resource(sigma, d) / d.mean()) << '\n';
  }
}

}  // namespace specexec::cli

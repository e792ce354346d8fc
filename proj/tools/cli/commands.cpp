#include "commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "driver.hpp"
#include "specexec/errors.hpp"

namespace specexec::cli {

namespace {

int simulate(const std::string& config_path, const std::string& out_override, unsigned workers, bool trace,
             std::ostream& out) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  DriverOptions opt;
  opt.out_dir = out_override.empty() ? cfg.output_dir : out_override;
  opt.workers = workers;
  opt.trace = trace;
  const auto results = run_experiment(cfg, opt);
  write_summary_csv(out, results);
  return 0;
}

int threshold(const std::string& config_path, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const WorkloadProfile profile = cfg.threshold_profile();
  try {
    out << regime_report_json(profile, cutoff(profile)) << '\n';
  } catch (const DivergingMomentError& e) {
    err << "error: " << e.what()
        << "\nthe regime cutoff compares M/G/1 delays, which need a finite second moment of the"
           " task duration (Pareto shape > 2); shape here is "
        << profile.task_law.shape() << '\n';
    return 2;
  }
  return 0;
}

int sweep(SweepOptions o, const std::string& grid, const std::string& out_path, std::ostream& out) {
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(grid);
  if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
    throw CLI::ValidationError("--grid", "expected LO:HI:STEP, got '" + grid + "'");
  o.lo = lo;
  o.hi = hi;
  o.step = step;
  if (out_path.empty()) {
    write_sweep_csv(out, o);
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    write_sweep_csv(f, o);
  }
  return 0;
}

int solve_p2(const std::string& config_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const BatchConfig bc = load_batch_config(config_path);
  if (!bc.batch.eligible()) {
    err << "error: batch is not eligible for cloning: it needs " << bc.batch.total_tasks()
        << " machines for single copies but only " << bc.batch.available_machines
        << " are available (strictly more are required)\n";
    return 2;
  }
  try {
    const CloneAssignment a = solve_dual(bc.batch, bc.dual);
    out << assignment_json(bc.batch, a, out_dir.empty()) << '\n';
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream f(std::filesystem::path(out_dir) / "p2_trace.csv", std::ios::binary);
      write_p2_trace_csv(f, a);
    }
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (last dual value "
        << (e.trace().empty() ? 0.0 : e.trace().back()) << ")\n";
    return 2;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speculative-execution cluster simulator and optimization kernels", "specsim"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool trace = false;
  auto* sim = app.add_subcommand("simulate", "Run every (policy, arrival rate, seed) cell of an experiment");
  sim->add_option("--config", config, "Experiment config file")->required();
  sim->add_option("--out", out_dir, "Output directory (overrides the config)");
  sim->add_option("--workers", workers, "Parallel cells")->check(CLI::PositiveNumber);
  sim->add_flag("--trace", trace, "Write a JSONL event trace per cell");

  auto* thr = app.add_subcommand("threshold", "Print the light/heavy load cutoff as JSON");
  thr->add_option("--config", config, "Experiment config file")->required();

  SweepOptions sweep_opt;
  std::string model = "detect";
  std::string grid = "1.1:3.0:0.05";
  std::string sweep_out;
  auto* sw = app.add_subcommand("sweep-sigma", "Tabulate the detection objective over a sigma grid");
  sw->add_option("--model", model, "detect or ese")->check(CLI::IsMember({"detect", "ese"}));
  sw->add_option("--alpha", sweep_opt.alpha, "Pareto shape")->check(CLI::Range(1.0 + 1e-12, 1e6));
  sw->add_option("--grid", grid, "LO:HI:STEP");
  sw->add_option("--progress", sweep_opt.progress, "Detection progress fraction s")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  sw->add_option("--cap", sweep_opt.cap, "Copy cap")->check(CLI::PositiveNumber);
  sw->add_option("--scale", sweep_opt.scale, "Pareto scale")->check(CLI::PositiveNumber);
  sw->add_option("--out", sweep_out, "CSV file (default: stdout)");

  auto* p2 = app.add_subcommand("solve-p2", "Solve the cloning relaxation for one batch");
  p2->add_option("--config", config, "Batch file")->required();
  p2->add_option("--out", out_dir, "Directory for p2_trace.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*sim) return simulate(config, out_dir, workers, trace, out);
    if (*thr) return threshold(config, out, err);
    if (*sw) {
      sweep_opt.model = model == "ese" ? SweepModel::Ese : SweepModel::Detect;
      return sweep(sweep_opt, grid, sweep_out, out);
    }
    if (*p2) return solve_p2(config, out_dir, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace specexec::cli

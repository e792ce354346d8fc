#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "specexec/detect_opt.hpp"
#include "specexec/metrics.hpp"

namespace specexec::cli {

struct Cell {
  std::string label;
  double arrival_rate;
  std::uint64_t seed;
  PolicyParams params;

  std::string stem() const;
};

struct CellResult {
  Cell cell;
  MetricsReport report;
  SimCounters counters;
};

// Every (arrival rate, policy, seed) combination in a fixed order.
std::vector<Cell> expand_cells(const ExperimentConfig& cfg);

struct DriverOptions {
  std::filesystem::path out_dir;
  unsigned workers = 1;
  bool trace = false;
};

// Runs all cells on `workers` threads and writes per-cell reports, CDF CSVs,
// optional traces and summary.csv. Results come back in cell order.
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, const DriverOptions& options);

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& results);

std::string regime_report_json(const WorkloadProfile& profile, const RegimeReport& report);
std::string assignment_json(const PendingBatch& batch, const CloneAssignment& a, bool with_trace);
void write_p2_trace_csv(std::ostream& out, const CloneAssignment& a);

enum class SweepModel { Detect, Ese };

struct SweepOptions {
  SweepModel model = SweepModel::Detect;
  double alpha = 2.0;
  double lo = 1.1;
  double hi = 3.0;
  double step = 0.05;
  double progress = 0.25;
  int cap = 8;
  double scale = 1.0;
};

// Grid points lo, lo + step, ... <= hi (inclusive up to rounding).
std::vector<double> sweep_grid(double lo, double hi, double step);

// detect: sigma,expected_cost,optimal_c,analysed ; ese: sigma,resource_ratio
void write_sweep_csv(std::ostream& out, const SweepOptions& options);

}  // namespace specexec::cli

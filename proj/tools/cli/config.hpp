#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specexec/clone_opt.hpp"
#include "specexec/sim.hpp"
#include "specexec/threshold.hpp"

namespace specexec::cli {

// A malformed configuration. what() reads "<source>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct PolicySpec {
  std::string label;  // file-name stem, defaults to the policy name
  PolicyParams params;
};

struct ExperimentConfig {
  ClusterConfig cluster;  // seed is set per cell
  WorkloadSpec workload;  // arrival_rate is set per cell
  std::vector<double> arrival_rates;
  std::vector<PolicySpec> policies;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  std::optional<WorkloadProfile> threshold;

  // The regime profile: the explicit threshold section if present, otherwise
  // derived from the cluster and the first arrival rate.
  WorkloadProfile threshold_profile() const;
};

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

struct BatchConfig {
  PendingBatch batch;
  DualState dual;
};

BatchConfig parse_batch_config(const std::string& text, const std::string& source = "<batch>");
BatchConfig load_batch_config(const std::string& path);

}  // namespace specexec::cli

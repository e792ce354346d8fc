#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace specexec {

struct JobRecord {
  std::int64_t id = 0;
  double arrival = 0.0;
  double finish = 0.0;
  double flowtime = 0.0;
  double resource = 0.0;  // gamma * total machine time of all copies
  int tasks = 0;

  bool operator==(const JobRecord&) const = default;
};

struct CdfPoint {
  double value;
  double fraction;

  bool operator==(const CdfPoint&) const = default;
};

enum class Metric { Flowtime, Resource };

// Empirical CDF at the sorted distinct values. Throws on empty input.
std::vector<CdfPoint> cdf_points(std::vector<double> values);

// Smallest v with empirical CDF(v) >= p, p in (0, 1].
double percentile(std::span<const double> values, double p);

struct MetricsReport {
  std::string policy;
  double gamma = 0.0;
  std::vector<JobRecord> jobs;  // arrived and finished within the horizon
  int censored = 0;             // arrived but unfinished at the horizon
  double censored_resource = 0.0;

  std::vector<CdfPoint> flowtime_cdf;
  std::vector<CdfPoint> resource_cdf;
  std::optional<double> mean_flowtime;
  std::optional<double> median_flowtime;
  std::optional<double> p80_flowtime;
  std::optional<double> p90_flowtime;
  std::optional<double> mean_resource;
  double total_resource = 0.0;  // finished jobs plus censored consumption
  double utility_minus_resource = 0.0;  // -sum flowtime - sum resource over finished jobs

  static MetricsReport build(std::string policy, double gamma, std::vector<JobRecord> jobs,
                             int censored, double censored_resource);

  std::vector<double> values(Metric m) const;

  bool operator==(const MetricsReport&) const = default;
};

// Throws std::invalid_argument on an empty report.
double percentile(const MetricsReport& report, Metric m, double p);

std::string to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view text);

// job_id,arrival,finish,flowtime,resource,tasks
void write_jobs_csv(std::ostream& out, const MetricsReport& report);
// value,fraction
void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& cdf);

const char* to_string(Metric m);

// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

}  // namespace specexec

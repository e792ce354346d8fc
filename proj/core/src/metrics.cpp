#include "specexec/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace specexec {

using nlohmann::json;

std::vector<CdfPoint> cdf_points(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("cdf of an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], (i + 1) / n});
  }
  out.back().fraction = 1.0;
  return out;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile level must lie in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // rank k (1-based) is the smallest with k / n >= p
  auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-9 * n));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

MetricsReport MetricsReport::build(std::string policy, double gamma, std::vector<JobRecord> jobs,
                                   int censored, double censored_resource) {
  MetricsReport r;
  r.policy = std::move(policy);
  r.gamma = gamma;
  r.jobs = std::move(jobs);
  r.censored = censored;
  r.censored_resource = censored_resource;
  double flow_sum = 0.0;
  double resource_sum = 0.0;
  for (const auto& j : r.jobs) {
    flow_sum += j.flowtime;
    resource_sum += j.resource;
  }
  r.total_resource = resource_sum + censored_resource;
  r.utility_minus_resource = -flow_sum - resource_sum;
  if (!r.jobs.empty()) {
    const auto flow = r.values(Metric::Flowtime);
    const auto resource = r.values(Metric::Resource);
    r.flowtime_cdf = cdf_points(flow);
    r.resource_cdf = cdf_points(resource);
    r.mean_flowtime = flow_sum / static_cast<double>(r.jobs.size());
    r.mean_resource = resource_sum / static_cast<double>(r.jobs.size());
    r.median_flowtime = percentile(flow, 0.5);
    r.p80_flowtime = percentile(flow, 0.8);
    r.p90_flowtime = percentile(flow, 0.9);
  }
  return r;
}

std::vector<double> MetricsReport::values(Metric m) const {
  std::vector<double> out;
  out.reserve(jobs.size());
  for (const auto& j : jobs) out.push_back(m == Metric::Flowtime ? j.flowtime : j.resource);
  return out;
}

double percentile(const MetricsReport& report, Metric m, double p) {
  if (report.jobs.empty()) throw std::invalid_argument("percentile of an empty report");
  return percentile(report.values(m), p);
}

const char* to_string(Metric m) { return m == Metric::Flowtime ? "flowtime" : "resource"; }

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json cdf_json(const std::vector<CdfPoint>& cdf) {
  json out = json::array();
  for (const auto& p : cdf) out.push_back({p.value, p.fraction});
  return out;
}

std::vector<CdfPoint> cdf_from(const json& j) {
  std::vector<CdfPoint> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

}  // namespace

std::string to_json(const MetricsReport& r) {
  json jobs = json::array();
  for (const auto& j : r.jobs)
    jobs.push_back({{"job_id", j.id},
                    {"arrival", j.arrival},
                    {"finish", j.finish},
                    {"flowtime", j.flowtime},
                    {"resource", j.resource},
                    {"tasks", j.tasks}});
  json out = {
      {"schema_version", 1},
      {"policy", r.policy},
      {"gamma", r.gamma},
      {"jobs", jobs},
      {"censored", r.censored},
      {"censored_resource", r.censored_resource},
      {"summary",
       {{"finished", r.jobs.size()},
        {"mean_flowtime", optional_number(r.mean_flowtime)},
        {"median_flowtime", optional_number(r.median_flowtime)},
        {"p80_flowtime", optional_number(r.p80_flowtime)},
        {"p90_flowtime", optional_number(r.p90_flowtime)},
        {"mean_resource", optional_number(r.mean_resource)},
        {"total_resource", r.total_resource},
        {"utility_minus_resource", r.utility_minus_resource}}},
      {"flowtime_cdf", cdf_json(r.flowtime_cdf)},
      {"resource_cdf", cdf_json(r.resource_cdf)},
  };
  return out.dump(2);
}

MetricsReport report_from_json(std::string_view text) {
  const json j = json::parse(text);
  MetricsReport r;
  r.policy = j.at("policy").get<std::string>();
  r.gamma = j.at("gamma").get<double>();
  for (const auto& e : j.at("jobs"))
    r.jobs.push_back({e.at("job_id").get<std::int64_t>(), e.at("arrival").get<double>(),
                      e.at("finish").get<double>(), e.at("flowtime").get<double>(),
                      e.at("resource").get<double>(), e.at("tasks").get<int>()});
  r.censored = j.at("censored").get<int>();
  r.censored_resource = j.at("censored_resource").get<double>();
  const json& s = j.at("summary");
  r.mean_flowtime = read_optional(s, "mean_flowtime");
  r.median_flowtime = read_optional(s, "median_flowtime");
  r.p80_flowtime = read_optional(s, "p80_flowtime");
  r.p90_flowtime = read_optional(s, "p90_flowtime");
  r.mean_resource = read_optional(s, "mean_resource");
  r.total_resource = s.at("total_resource").get<double>();
  r.utility_minus_resource = s.at("utility_minus_resource").get<double>();
  r.flowtime_cdf = cdf_from(j.at("flowtime_cdf"));
  r.resource_cdf = cdf_from(j.at("resource_cdf"));
  return r;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_jobs_csv(std::ostream& out, const MetricsReport& r) {
  out << "job_id,arrival,finish,flowtime,resource,tasks\n";
  for (const auto& j : r.jobs)
    out << j.id << ',' << format_number(j.arrival) << ',' << format_number(j.finish) << ','
        << format_number(j.flowtime) << ',' << format_number(j.resource) << ',' << j.tasks << '\n';
}

void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& cdf) {
  out << "value,fraction\n";
  for (const auto& p : cdf) out << format_number(p.value) << ',' << format_number(p.fraction) << '\n';
}

}  // namespace specexec

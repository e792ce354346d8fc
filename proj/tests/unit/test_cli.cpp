#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "driver.hpp"

using namespace specexec;
using namespace specexec::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SPECEXEC_SOURCE_DIR) / "configs";

struct Cli {
  int code;
  std::string out;
  std::string err;
};

Cli invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "specsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("specsim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const char* kMinimal = R"({
  "cluster": {"machines": 50, "gamma": 0.01, "slot_length": 1, "copy_cap": 8, "horizon": 100},
  "workload": {"arrival_rates": [0.2], "shape": 2, "tasks": [1, 10], "mean_duration": [1, 4]},
  "policies": [{"name": "nospec"}],
  "seeds": [1]
})";

// First data row with the smallest value in column `col`.
std::vector<std::string> min_row(const std::string& csv, int col) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> best;
  double best_v = 1e300;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() > 3 && cells[3] == "0") continue;  // detect rows outside the analysed range
    const double v = std::stod(cells[static_cast<std::size_t>(col)]);
    if (v < best_v) {
      best_v = v;
      best = cells;
    }
  }
  return best;
}

}  // namespace

TEST(Config, MinimalParses) {
  const auto cfg = parse_experiment_config(kMinimal);
  EXPECT_EQ(cfg.cluster.machines, 50);
  EXPECT_EQ(cfg.policies.size(), 1u);
  EXPECT_EQ(cfg.policies[0].label, "nospec");
  EXPECT_EQ(cfg.workload.max_tasks, 10);
  EXPECT_EQ(cfg.output_dir, "out");
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"desk-scale.json", "full-scale.json", "sda-sigma.json", "heavy.json",
                           "single-job.json", "threshold.json", "threshold-alpha2.json"})
    EXPECT_NO_THROW(load_experiment_config((kConfigs / name).string())) << name;
  EXPECT_NO_THROW(load_batch_config((kConfigs / "reference-batch.json").string()));
}

TEST(Config, EmptySeedsRejected) {
  std::string text = kMinimal;
  text.replace(text.find("[1]"), 3, "[]");
  EXPECT_THROW(parse_experiment_config(text), ConfigError);
}

TEST(Config, UnknownPolicyNamesField) {
  std::string text = kMinimal;
  text.replace(text.find("nospec"), 6, "hadoop");
  try {
    parse_experiment_config(text, "exp.json");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("exp.json:4:"), std::string::npos) << what;
    EXPECT_NE(what.find("name"), std::string::npos) << what;
    EXPECT_NE(what.find("hadoop"), std::string::npos) << what;
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(Config, UnknownKeyReportsLine) {
  std::string text = kMinimal;
  text.replace(text.find("\"horizon\""), 9, "\"horizn\"");
  try {
    parse_experiment_config(text, "exp.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("horizn"), std::string::npos);
  }
}

TEST(Config, OutOfRangeValueRejected) {
  std::string text = kMinimal;
  text.replace(text.find("50"), 2, "-5");
  EXPECT_THROW(parse_experiment_config(text), ConfigError);
}

TEST(Config, SigmaAutoAndNumber) {
  const auto cfg = load_experiment_config((kConfigs / "sda-sigma.json").string());
  int numeric = 0;
  for (const auto& p : cfg.policies)
    if (p.params.kind == PolicyKind::Sda && p.params.sigma) ++numeric;
  EXPECT_EQ(numeric, 3);
  EXPECT_FALSE(load_experiment_config((kConfigs / "desk-scale.json").string()).policies[2].params.sigma);
}

TEST(Driver, CellOrderAndStems) {
  const auto cells = expand_cells(load_experiment_config((kConfigs / "desk-scale.json").string()));
  ASSERT_EQ(cells.size(), 9u);
  EXPECT_EQ(cells[0].stem(), "mantri_lambda0.6_seed1");
  EXPECT_EQ(cells[8].stem(), "sda_lambda0.6_seed3");
}

TEST(Simulate, PaperLiteWritesNineReportsAndSummary) {
  const auto dir = scratch("lite");
  const auto r = invoke({"simulate", "--config", (kConfigs / "desk-scale.json").string(), "--out",
                         dir.string(), "--workers", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  int reports = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") ++reports;
  EXPECT_EQ(reports, 9);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_EQ(slurp(dir / "summary.csv"), r.out);
}

TEST(Simulate, ByteIdenticalAcrossRunsAndWorkers) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const std::string cfg = (kConfigs / "heavy.json").string();
  ASSERT_EQ(invoke({"simulate", "--config", cfg, "--out", a.string(), "--workers", "1", "--trace"}).code, 0);
  ASSERT_EQ(invoke({"simulate", "--config", cfg, "--out", b.string(), "--workers", "3", "--trace"}).code, 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_GT(files, 10);
}

TEST(Simulate, MissingConfigIsUsageError) {
  EXPECT_EQ(invoke({"simulate"}).code, 1);
  EXPECT_EQ(invoke({"simulate", "--config", "/nonexistent.json"}).code, 1);
}

TEST(Threshold, ValidConfigReportsPositiveCutoff) {
  const auto r = invoke({"threshold", "--config", (kConfigs / "threshold.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j.at("lambda_upper").get<double>(), 0.0);
  EXPECT_EQ(j.at("kind"), "interior");
}

TEST(Threshold, ShapeTwoIsDocumentedError) {
  const auto r = invoke({"threshold", "--config", (kConfigs / "threshold-alpha2.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("second moment"), std::string::npos) << r.err;
}

TEST(Threshold, MissingFieldDiagnostic) {
  const auto dir = scratch("thr_missing");
  std::ofstream(dir / "bad.json") << R"({"cluster": {"machines": 10}, "policies": [{"name": "nospec"}], "seeds": [1]})";
  const auto r = invoke({"threshold", "--config", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.json:1:"), std::string::npos) << r.err;
}

TEST(Sweep, DetectMinimumAtOnePointSevenOhSeven) {
  const auto r = invoke({"sweep-sigma", "--model", "detect", "--alpha", "2", "--grid", "1.1:3.0:0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto row = min_row(r.out, 1);
  EXPECT_NEAR(std::stod(row[0]), 1.7071, 0.05);
  EXPECT_EQ(row[2], "2");
}

TEST(Sweep, EseMinimaTrackShape) {
  auto r = invoke({"sweep-sigma", "--model", "ese", "--alpha", "2", "--grid", "0.5:4:0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(min_row(r.out, 1)[0]), 1.7, 0.1);
  r = invoke({"sweep-sigma", "--model", "ese", "--alpha", "5", "--grid", "0.5:4:0.05"});
  EXPECT_NEAR(std::stod(min_row(r.out, 1)[0]), 2.0, 0.1);
}

TEST(Sweep, BadGridRejected) {
  EXPECT_EQ(invoke({"sweep-sigma", "--grid", "1:2"}).code, 1);
  EXPECT_EQ(invoke({"sweep-sigma", "--model", "magic"}).code, 1);
}

TEST(SolveP2, ReferenceBatchConverges) {
  const auto dir = scratch("p2");
  const auto r = invoke({"solve-p2", "--config", (kConfigs / "reference-batch.json").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j.at("iterations").get<int>(), 10000);
  ASSERT_EQ(j.at("jobs").size(), 4u);
  for (const auto& job : j.at("jobs")) EXPECT_GE(job.at("rounded").get<int>(), 1);
  const std::string trace = slurp(dir / "p2_trace.csv");
  EXPECT_EQ(trace.rfind("iteration,dual_value,c1,c2,c3,c4\n", 0), 0u);
}

TEST(SolveP2, SingleJobMatchesOneDimensionalAnswer) {
  const auto dir = scratch("p2_single");
  std::ofstream(dir / "one.json") << R"({"slot": 0, "available_machines": 50, "copy_cap": 8, "gamma": 0.01,
    "jobs": [{"id": 0, "tasks": 5, "arrival": 0, "scale": 1, "shape": 2}]})";
  const auto r = invoke({"solve-p2", "--config", (dir / "one.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double c = j.at("jobs")[0].at("continuous").get<double>();
  double best = 1.0;
  double best_v = -1e300;
  for (double x = 1.0; x <= 8.0; x += 0.001) {
    const double v = job_objective({0, 5, 0.0, ParetoDist(1, 2)}, x, 0, 0.01);
    if (v > best_v) {
      best_v = v;
      best = x;
    }
  }
  EXPECT_NEAR(c, best, 1e-2);
}

TEST(SolveP2, FullCapacityIsInfeasible) {
  const auto dir = scratch("p2_full");
  std::ofstream(dir / "full.json") << R"({"slot": 0, "available_machines": 15, "copy_cap": 8, "gamma": 0.01,
    "jobs": [{"id": 0, "tasks": 10, "arrival": 0, "scale": 1, "shape": 2},
             {"id": 1, "tasks": 5, "arrival": 0, "scale": 1, "shape": 2}]})";
  const auto r = invoke({"solve-p2", "--config", (dir / "full.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not eligible"), std::string::npos) << r.err;
}

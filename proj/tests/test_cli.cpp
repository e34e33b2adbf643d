#include <gtest/gtest.h>

#include "fixtures.hpp"

#include <busdrive/cli.hpp>

#include <filesystem>
#include <sstream>

using namespace busdrive;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("busdrive_cli_" + name);
  fs::remove_all(d);
  return d;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "busdrive");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), err);
  if (err_text) *err_text = err.str();
  return code;
}

json read_json(const fs::path& p) { return json::parse(fx::read_file(p.string())); }

struct SweepCsvRow {
  std::string status;
  double score = 0.0;
  int relocations = 0;
};

std::vector<SweepCsvRow> read_sweep(const fs::path& p) {
  std::istringstream in(fx::read_file(p.string()));
  std::string line;
  std::getline(in, line);
  std::vector<SweepCsvRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    rows.push_back({f.at(3), std::stod(f.at(5)), std::stoi(f.at(6))});
  }
  return rows;
}

std::string t1() { return fx::data_path("t1.json"); }
std::string t2() { return fx::data_path("t2.json"); }

}  // namespace

TEST(Cli, GenWritesValidInstance) {
  const auto d = fresh_dir("gen");
  ASSERT_EQ(run_cli({"gen", "--gen", "3,2,2,2", "--out", d.string()}), cli::kExitOk);
  const auto inst = parse_instance(fx::read_file((d / "instance.json").string()));
  EXPECT_TRUE(validate_instance(inst).empty());
  EXPECT_EQ(inst.lines().size(), 2u);
}

TEST(Cli, SolveT1) {
  const auto d = fresh_dir("solve");
  ASSERT_EQ(run_cli({"solve", "--instance", t1(), "--mipgap", "0", "--write-lp", "--out", d.string()}), cli::kExitOk);
  const auto j = read_json(d / "summary.json");
  EXPECT_NEAR(j["objective"].get<double>(), -86.0, 1e-6);
  EXPECT_EQ(j["schedule"]["buses"].get<int>(), 1);
  for (const char* f : {"schedule.csv", "breakdown.csv", "heatmap.csv", "model.lp"}) EXPECT_TRUE(fs::exists(d / f)) << f;
}

TEST(Cli, BruteSolverAgrees) {
  const auto d = fresh_dir("brute");
  ASSERT_EQ(run_cli({"solve", "--instance", t2(), "--solver", "brute", "--out", d.string()}), cli::kExitOk);
  EXPECT_NEAR(read_json(d / "summary.json")["objective"].get<double>(), -89.3, 1e-6);
}

TEST(Cli, PerBusFormulation) {
  const auto d = fresh_dir("perbus");
  ASSERT_EQ(run_cli({"solve", "--instance", t2(), "--form", "per_bus", "--mipgap", "0", "--node-limit", "100000", "--out", d.string()}),
            cli::kExitOk);
  EXPECT_NEAR(read_json(d / "summary.json")["objective"].get<double>(), -89.3, 1e-6);
}

TEST(Cli, BoundsBracketBatch) {
  const auto d = fresh_dir("bounds");
  ASSERT_EQ(run_cli({"bounds", "--instance", t2(), "--mipgap", "0", "--out", d.string()}), cli::kExitOk);
  const auto j = read_json(d / "bounds.json");
  EXPECT_LE(j["lb"].get<double>(), j["batch_objective"].get<double>() + 1e-6);
  EXPECT_LE(j["batch_objective"].get<double>(), j["ub"].get<double>() + 1e-6);
  EXPECT_TRUE(j["worst_case_gap"].is_null());
}

TEST(Cli, BatchWritesReport) {
  const auto d = fresh_dir("batch");
  ASSERT_EQ(run_cli({"batch", "--instance", t2(), "--omega-grid", "0.5,1", "--out", d.string()}), cli::kExitOk);
  const auto j = read_json(d / "batch.json");
  EXPECT_EQ(j["trace"].size(), 3u);
  EXPECT_TRUE(fs::exists(d / "schedule.csv"));
}

TEST(Cli, NoBusesIsInfeasible) {
  const auto d = fresh_dir("nobus");
  fs::create_directories(d);
  auto doc = json::parse(fx::read_file(t1()));
  doc["fleet"]["total"] = 0;
  doc["fleet"]["max_ib"] = 0;
  const auto path = (d / "empty_fleet.json").string();
  std::ofstream(path) << doc.dump();
  std::string err;
  EXPECT_EQ(run_cli({"solve", "--instance", path, "--out", d.string()}, &err), cli::kExitInfeasible);
  EXPECT_NE(err.find("infeasible"), std::string::npos);
  EXPECT_EQ(run_cli({"batch", "--instance", path, "--out", d.string()}), cli::kExitInfeasible);
}

TEST(Cli, ConfigErrors) {
  const auto d = fresh_dir("cfg").string();
  EXPECT_EQ(run_cli({"solve", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"solve", "--instance", t1(), "--gen", "1,1,1,1", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"batch", "--instance", t1(), "--omega-grid", "1,0.5", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"solve", "--instance", t1(), "--ib", "5", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"solve", "--instance", "/nonexistent.json", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"solve", "--instance", t1(), "--form", "dense", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"sweep", "--instance", t1(), "--param", "speed", "--values", "1", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"compare", "--instance", t1(), "--mode", "fast", "--out", d}), cli::kExitConfig);
  EXPECT_EQ(run_cli({"frobnicate"}), cli::kExitConfig);
}

TEST(Cli, SweepDeltaRaisesScore) {
  const auto d = fresh_dir("sweep_delta");
  ASSERT_EQ(run_cli({"sweep", "--instance", t2(), "--param", "delta", "--values", "0,100,1000000", "--mipgap", "0", "--node-limit",
                     "100000", "--out", d.string()}),
            cli::kExitOk);
  const auto rows = read_sweep(d / "sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].status, "ok");
    EXPECT_GE(rows[i].score, rows[i - 1].score - 1e-9);
  }
  EXPECT_GT(rows.back().score, rows.front().score);
}

TEST(Cli, SweepRelocationCostCutsRelocations) {
  const auto d = fresh_dir("sweep_reloc");
  ASSERT_EQ(run_cli({"sweep", "--instance", t2(), "--param", "relocation_cost", "--values", "0,2,1000000", "--mipgap", "0",
                     "--node-limit", "100000", "--out", d.string()}),
            cli::kExitOk);
  const auto rows = read_sweep(d / "sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].relocations, rows[i - 1].relocations);
  EXPECT_EQ(rows.back().relocations, 0);
  EXPECT_GE(rows.front().relocations, 1);
}

TEST(Cli, SweepSinglePointMatchesSolve) {
  const auto d = fresh_dir("sweep_one");
  ASSERT_EQ(run_cli({"sweep", "--instance", t2(), "--param", "delta", "--values", "100", "--out", d.string()}), cli::kExitOk);
  ASSERT_EQ(run_cli({"solve", "--instance", t2(), "--out", d.string()}), cli::kExitOk);
  const auto csv = fx::read_file((d / "sweep.csv").string());
  const double objective = read_json(d / "summary.json")["objective"].get<double>();
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",%.6f,", objective);
  EXPECT_NE(csv.find(buf), std::string::npos) << csv;
}

TEST(Cli, SweepInvalidValueKeepsGoing) {
  const auto d = fresh_dir("sweep_bad");
  ASSERT_EQ(run_cli({"sweep", "--instance", t2(), "--param", "delta_k", "--values", "4,3", "--out", d.string()}), cli::kExitOk);
  const auto rows = read_sweep(d / "sweep.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "invalid");
  EXPECT_EQ(rows[1].status, "ok");
}

TEST(Cli, CompareDeterministic) {
  const auto a = fresh_dir("cmp_a");
  const auto b = fresh_dir("cmp_b");
  for (const auto& d : {a, b}) {
    ASSERT_EQ(run_cli({"compare", "--gen", "2,3,2,2", "--ib", "2", "--draws", "10", "--sizes", "1,2", "--out", d.string()}),
              cli::kExitOk);
  }
  EXPECT_EQ(fx::read_file((a / "compare.csv").string()), fx::read_file((b / "compare.csv").string()));
  EXPECT_EQ(fx::read_file((a / "compare.json").string()), fx::read_file((b / "compare.json").string()));
  EXPECT_EQ(read_json(a / "compare.json")["rows"].size(), 6u);
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "r3dla/experiment.hpp"

using namespace r3dla;
namespace fs = std::filesystem;

namespace {

nlohmann::json chase_config(const char* mode = "baseline") {
  return {{"workload", {{"kind", "pointer_chase"}, {"params", {{"len", 1500}, {"work", 200}}}, {"seed", 2}}},
          {"mode", mode},
          {"limit", 300000}};
}

std::string error_path(const nlohmann::json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("r3dla_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                       "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

int run_tool(const std::string& cmd) {
  const char* d = std::getenv("R3DLA_TOOLS");
  std::string bin = d ? std::string(d) + "/" : std::string("./");
  int rc = std::system((bin + cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, ParsesAllSections) {
  auto j = chase_config("dla");
  j["core"] = {{"fetch_width", 8}, {"fetch_buffer", 16}};
  j["cache"] = {{"l1", {{"mshrs", 4}}}, {"dram_latency", 150}};
  j["features"] = {{"t1", true}, {"recycle", true}};
  j["recycle"] = {{"unit_instructions", 20000}};
  j["engine"] = {{"boq_capacity", 64}, {"inject_vp_error_rate", 0.1}};
  j["t1"] = {{"capacity", 8}};
  j["sif"] = {{"bits", 512}};
  j["initial_version"] = 2;
  auto c = parse_config(j);
  EXPECT_TRUE(c.dla);
  EXPECT_EQ(c.engine.core.fetch_width, 8u);
  EXPECT_EQ(c.engine.core.fetch_buffer, 16u);
  EXPECT_EQ(c.engine.cache.l1.mshrs, 4u);
  EXPECT_EQ(c.engine.cache.dram_latency, 150u);
  EXPECT_TRUE(c.engine.features.t1);
  EXPECT_EQ(c.engine.recycle.mode, RecycleMode::dynamic);
  EXPECT_EQ(c.engine.recycle.unit_instructions, 20000u);
  EXPECT_EQ(c.engine.boq_capacity, 64u);
  EXPECT_EQ(c.engine.t1.capacity, 8u);
  EXPECT_EQ(c.engine.sif_bits, 512u);
  EXPECT_EQ(c.engine.initial_version, 2);
}

TEST(Config, ErrorsNameTheField) {
  auto j = chase_config();
  j["core"] = {{"fetch_widht", 4}};
  EXPECT_EQ(error_path(j), "core.fetch_widht");
  j = chase_config();
  j["core"] = {{"window", "big"}};
  EXPECT_EQ(error_path(j), "core.window");
  j = chase_config();
  j["workload"]["params"]["len"] = -1;
  EXPECT_EQ(error_path(j), "<none>");  // caught when the workload is generated
  EXPECT_THROW(load_program(parse_config(j)), ConfigError);
  j = chase_config();
  j["workload"]["kind"] = "chess";
  EXPECT_EQ(error_path(j), "workload.kind");
  j = chase_config();
  j["mode"] = "fast";
  EXPECT_EQ(error_path(j), "mode");
  j = chase_config();
  j["initial_version"] = 6;
  EXPECT_EQ(error_path(j), "initial_version");
  j = chase_config();
  j.erase("workload");
  EXPECT_EQ(error_path(j), "workload");
  j = chase_config();
  j["cache"] = {{"l1", {{"size_bytes", 1000}}}};
  EXPECT_EQ(error_path(j), "");
}

TEST(Config, SeedFromEnvironment) {
  ::setenv("R3DLA_SEED", "77", 1);
  auto c = parse_config(chase_config());
  ::unsetenv("R3DLA_SEED");
  EXPECT_EQ(c.workload.seed, 77u);
  EXPECT_EQ(c.engine.seed, 77u);
  ::setenv("R3DLA_SEED", "x", 1);
  EXPECT_THROW(parse_config(chase_config()), ConfigError);
  ::unsetenv("R3DLA_SEED");
}

TEST(Experiment, ReportCarriesHashAndVersion) {
  auto r = run_experiment(parse_config(chase_config()));
  EXPECT_EQ(r.report["version"], kToolVersion);
  EXPECT_EQ(r.report["config_hash"].get<std::string>().size() > 0, true);
  EXPECT_EQ(r.report["stats"]["committed"]["mt"], r.stats.mt_committed);
  auto again = run_experiment(parse_config(chase_config()));
  EXPECT_EQ(again.report, r.report);
}

TEST(Experiment, CompareColumns) {
  auto base = parse_config(chase_config());
  auto same = run_experiment(base);
  auto csv = compare_csv({"a", "b", "c"}, {same, same, same});
  EXPECT_NE(csv.find("speedup,1,1,1\n"), std::string::npos);
  EXPECT_NE(csv.find("traffic_ratio,1,1,1\n"), std::string::npos);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,a,b,c");

  auto j = chase_config("dla");
  j["initial_version"] = 0;
  auto dla = run_experiment(parse_config(j));
  auto two = compare_csv({"base", "dla"}, {same, dla});
  auto line = two.substr(two.find("speedup,"));
  line = line.substr(0, line.find('\n'));
  EXPECT_GT(std::stod(line.substr(line.rfind(',') + 1)), 1.0);

  auto other = chase_config();
  other["workload"]["seed"] = 3;
  auto o = run_experiment(parse_config(other));
  EXPECT_THROW(compare_csv({"a", "b"}, {same, o}), ConfigError);
  EXPECT_NO_THROW(compare_csv({"a", "b"}, {same, o}, true));
}

TEST(Experiment, SweepRows) {
  auto csv = sweep_csv(parse_config(chase_config()), "fetch_buffer_capacity", {4, 16});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("fetch_buffer_capacity,cycles", 0), 0u);
}

TEST(Experiment, AblateTable) {
  auto j = chase_config("dla");
  j["limit"] = 100000;
  auto csv = ablate_csv(parse_config(j));
  EXPECT_EQ(csv.rfind("feature,first,last\n", 0), 0u);
  for (const auto& f : ablation_features()) EXPECT_NE(csv.find("\n" + f + ","), std::string::npos);
  EXPECT_THROW(ablate_csv(parse_config(chase_config())), ConfigError);
}

TEST(Tools, ExitCodes) {
  TempDir t;
  auto good = t.write("good.json", chase_config().dump());
  auto bad = t.write("bad.json", R"({"workload": {"kind": "pointer_chase"}, "colour": 1})");
  auto broken = t.write("broken.json", "{ not json");
  EXPECT_EQ(run_tool("sim run " + good.string() + " -o " + (t.dir / "r.json").string()), 0);
  EXPECT_TRUE(fs::exists(t.dir / "r.json"));
  EXPECT_EQ(run_tool("sim run " + bad.string()), 2);
  EXPECT_EQ(run_tool("sim run " + broken.string()), 2);
  EXPECT_EQ(run_tool("sim run " + (t.dir / "missing.json").string()), 2);
  EXPECT_EQ(run_tool("sim frobnicate"), 2);
  auto tiny = chase_config();
  tiny["engine"] = {{"max_cycles", 10}};
  EXPECT_EQ(run_tool("sim run " + t.write("tiny.json", tiny.dump()).string()), 1);

  EXPECT_EQ(run_tool("fetchq harvest --report " + (t.dir / "r.json").string() + " --demand-out " +
                     (t.dir / "D.json").string() + " --supply-out " + (t.dir / "S.json").string()),
            0);
  EXPECT_EQ(run_tool("fetchq analyze --demand " + (t.dir / "D.json").string() + " --supply " +
                     (t.dir / "S.json").string() + " --capacity-sweep 4:8 -o " + (t.dir / "e.csv").string()),
            0);
  std::ifstream csv(t.dir / "e.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "N,E_FB,Q_ss");
  EXPECT_EQ(run_tool("fetchq analyze --demand " + bad.string() + " --supply " + bad.string()), 2);

  EXPECT_EQ(run_tool("skel build --workload strided_loop --train-limit 20000 -o " + (t.dir / "s.json").string()), 0);
  auto s = skeleton_from_json(read_json_file(t.dir / "s.json"));
  EXPECT_EQ(s.versions.size(), 6u);
  EXPECT_EQ(run_tool("skel build --workload strided_loop --param nope=1"), 2);
}

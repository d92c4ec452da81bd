#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "isac/harness.hpp"

using namespace isac;
namespace fs = std::filesystem;

namespace {

ExperimentConfig smoke_config(const std::string& name) {
  ExperimentConfig c = desk_preset();
  c.run.trials = 2;
  c.sweep.devices = {4};
  c.run.output_dir = (fs::path(ISAC_TEST_TMP) / name).string();
  fs::remove_all(c.run.output_dir);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  for (std::string line; std::getline(s, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  for (std::string cell; std::getline(s, cell, ',');) out.push_back(cell);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ISAC_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("scene deployment") {
  Engine engine(1);
  const Scene s = deploy_scene(400, 10, engine);
  CHECK(s.size() == 10);
  CHECK(std::set<std::size_t>(s.target_indices.begin(), s.target_indices.end()).size() == 10);
  for (std::size_t i : s.target_indices) CHECK(i < 400);
  for (cdouble z : s.reflectivities) CHECK(z == cdouble(1.0, 0.0));
  CHECK_THROWS(deploy_scene(5, 6, engine));

  // Every index is equally likely.
  std::vector<int> counts(20, 0);
  for (int t = 0; t < 20000; ++t)
    for (std::size_t i : deploy_scene(20, 3, engine).target_indices) ++counts[i];
  for (int c : counts) CHECK(std::abs(c - 3000) < 250);
}

TEST_CASE("device deployment is uniform inside the area") {
  const ServiceArea area{60.0, Point2::Zero()};
  Engine engine(2);
  const auto devices = deploy_devices(area, 100000, engine);
  Point2 mean = Point2::Zero();
  for (const Point2& p : devices) {
    CHECK_FALSE(!area.strictly_contains(p));
    mean += p;
  }
  mean /= 100000.0;
  CHECK(std::abs(mean.x() - 30.0) < 0.3);
  CHECK(std::abs(mean.y() - 30.0) < 0.3);
}

TEST_CASE("config round trip and validation") {
  const ExperimentConfig desk = desk_preset();
  const nlohmann::json j = to_json(desk);
  CHECK(j.at("schema_version") == kConfigSchemaVersion);
  CHECK(to_json(config_from_json(j)) == j);

  nlohmann::json unknown = j;
  unknown["physical"]["carrier_frequency"] = 6e9;
  CHECK_THROWS(config_from_json(unknown));
  nlohmann::json top = j;
  top["extra"] = 1;
  CHECK_THROWS(config_from_json(top));
  nlohmann::json missing = j;
  missing.erase("schema_version");
  CHECK_THROWS(config_from_json(missing));
  nlohmann::json future = j;
  future["schema_version"] = 99;
  CHECK_THROWS(config_from_json(future));

  // Partial documents only touch the keys they name.
  const ExperimentConfig partial =
      config_from_json(nlohmann::json{{"schema_version", 1}, {"run", {{"trials", 7}}}}, desk);
  CHECK(partial.run.trials == 7);
  CHECK(partial.physical.grid_points == desk.physical.grid_points);

  ExperimentConfig bad = desk;
  bad.sweep.roles = {{3, 2}};  // 5 APUs but only 4 exist
  CHECK_THROWS(bad.validate());
  bad = desk;
  bad.physical.grid_points = 99;
  CHECK_THROWS(bad.validate());
  bad = desk;
  bad.sweep.devices = {17};  // more devices than subcarriers
  CHECK_THROWS(bad.validate());
  CHECK_NOTHROW(paper_preset().validate());
  CHECK_THROWS(preset_by_name("lab"));
}

TEST_CASE("sweep plan order") {
  ExperimentConfig c = desk_preset();
  c.sweep.antennas = {2, 4};
  c.sweep.roles = {{1, 3}, {2, 2}};
  const auto plan = sweep_plan(c);
  REQUIRE(plan.size() == 12);
  CHECK(plan[0].devices == 2);
  CHECK(plan[1].devices == 4);
  CHECK(plan[3].antennas == 4);
  CHECK(plan[6].roles.sensing == 2);
  for (std::size_t i = 0; i < plan.size(); ++i) CHECK(plan[i].id == i);
}

TEST_CASE("smoke run writes the expected rows") {
  const ExperimentConfig c = smoke_config("smoke");
  const ExperimentResult r = run_experiment(c);
  const fs::path dir = c.run.output_dir;
  for (const char* f : {"results.csv", "summary.csv", "config.resolved.json", "diagnostics.log"})
    CHECK(fs::exists(dir / f));

  const auto lines = lines_of(slurp(dir / "results.csv"));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == kResultsHeader);
  CHECK(split(lines[1])[1] == "0");
  CHECK(split(lines[2])[1] == "1");
  CHECK(split(lines[3])[1] == "-1");
  CHECK(split(lines[1])[5] == "4");

  REQUIRE(r.records.size() == 2);
  for (const TrialRecord& t : r.records) {
    CHECK(t.config_precision.size() == binomial(4, 2));
    CHECK(t.fused_precision >= 0.0);
    CHECK(t.fused_precision <= 1.0);
    CHECK(t.wall_ms == 0.0);
  }
  const double mean = (r.records[0].fused_precision + r.records[1].fused_precision) / 2.0;
  CHECK(r.aggregates[0].fused_precision_mean == mean);
  CHECK(std::stod(split(lines[3])[6]) == mean);
  const double rate = (r.records[0].sum_rate_bps + r.records[1].sum_rate_bps) / 2.0;
  CHECK(std::stod(split(lines[3])[8]) == doctest::Approx(rate).epsilon(1e-15));

  // Resolved config reloads to the same experiment.
  CHECK(to_json(load_config(dir / "config.resolved.json")) == to_json(c));

  // Rerun is byte-identical.
  ExperimentConfig again = c;
  again.run.output_dir = (fs::path(ISAC_TEST_TMP) / "smoke_again").string();
  run_experiment(again);
  CHECK(slurp(dir / "results.csv") == slurp(fs::path(again.run.output_dir) / "results.csv"));
}

TEST_CASE("aggregate arithmetic") {
  SweepPoint p;
  std::vector<TrialRecord> recs(4);
  const double v[] = {0.25, 0.5, 0.5, 1.0};
  for (int i = 0; i < 4; ++i) {
    recs[i].fused_precision = v[i];
    recs[i].sum_rate_bps = 10.0 * (i + 1);
    recs[i].config_precision = {v[i], 0.0};
  }
  const SweepAggregate a = aggregate(p, recs);
  CHECK(a.trials == 4);
  CHECK(a.fused_precision_mean == doctest::Approx(0.5625));
  // sample standard deviation / sqrt(n)
  const double sd = std::sqrt(((0.3125 * 0.3125) + 2 * (0.0625 * 0.0625) + (0.4375 * 0.4375)) / 3.0);
  CHECK(a.fused_precision_se == doctest::Approx(sd / 2.0));
  CHECK(a.sum_rate_mean == doctest::Approx(25.0));
  CHECK(a.config_precision_mean == doctest::Approx(0.28125));
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("dumps") {
  ExperimentConfig c = smoke_config("dumps");
  c.run.trials = 1;
  c.run.dump_scenes = true;
  c.run.dump_problems = true;
  c.run.trace_residuals = true;
  run_experiment(c);
  const fs::path dir = c.run.output_dir;
  const auto doc = nlohmann::json::parse(slurp(dir / "scene_0_0.json"));
  CHECK(doc.at("I") == 100);
  CHECK(doc.at("magnitudes").size() == 100);
  CHECK(doc.at("truth_indices").size() == 4);
  CHECK(doc.at("delta").get<double>() == doctest::Approx(60.0 / 11.0));
  double peak = 0.0;
  for (double m : doc.at("magnitudes")) peak = std::max(peak, m);
  CHECK(peak == 1.0);

  std::size_t dumps = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("problem_0_0_0_", 0) == 0) ++dumps;
  CHECK(dumps == 2);
  CHECK(slurp(dir / "diagnostics.log").find("trace sweep=0 trial=0 config=5:") != std::string::npos);
}

TEST_CASE("command line") {
  const fs::path tmp = fs::path(ISAC_TEST_TMP) / "cli";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  CHECK(run_cli("run --preset desk --dry-run --out \"" + (tmp / "dry").string() + "\"") == 0);
  CHECK_FALSE(fs::exists(tmp / "dry"));

  {
    std::ofstream bad(tmp / "bad.json");
    bad << R"({"schema_version": 1, "physical": {"warp_factor": 9}})";
  }
  CHECK(run_cli("run --config \"" + (tmp / "bad.json").string() + "\"") != 0);
  CHECK(run_cli("run") != 0);
  CHECK(run_cli("run --preset lab") != 0);

  {
    std::ofstream ok(tmp / "ok.json");
    ok << R"({
      // tiny experiment
      "schema_version": 1,
      "sweep": {"devices": [2]},
      "run": {"trials": 1}
    })";
  }
  CHECK(run_cli("run --preset desk --config \"" + (tmp / "ok.json").string() + "\" --out \"" +
                (tmp / "ok").string() + "\"") == 0);
  CHECK(lines_of(slurp(tmp / "ok" / "results.csv")).size() == 3);
}

// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

// Runs the uwbimu binary and checks exit codes and outputs.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "uwbimu/io.hpp"

namespace fs = std::filesystem;
using namespace uwbimu;

namespace {

const std::string kBinary = UWBIMU_CLI_PATH;
const std::string kScenarios = UWBIMU_SCENARIO_DIR;

int run_cli(const std::string& args) {
  const std::string cmd = "UWBIMU_LOG=quiet " + kBinary + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uwbimu_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string scenario(const std::string& name) { return kScenarios + "/" + name + ".json"; }

}  // namespace

TEST(Cli, MissingScenarioIsConfigError) {
  EXPECT_EQ(run_cli("analyze --scenario /nonexistent.json"), 2);
  EXPECT_EQ(run_cli("analyze"), 2);
}

TEST(Cli, MalformedScenarioIsConfigError) {
  const fs::path dir = temp_dir("bad");
  io::write_text((dir / "bad.json").string(), R"({"anchors": [], "duration": -1})");
  EXPECT_EQ(run_cli("simulate --scenario " + (dir / "bad.json").string() + " --out " + dir.string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run_cli("frobnicate"), 2); }

TEST(Cli, SimulateWritesDatasetTruthAndScenario) {
  const fs::path dir = temp_dir("sim");
  ASSERT_EQ(run_cli("simulate --scenario " + scenario("full_excitation") + " --out " + dir.string()), 0);
  const Dataset d = io::parse_dataset(io::read_text((dir / "dataset.jsonl").string()));
  const TruthSeries truth = io::parse_truth_csv(io::read_text((dir / "truth.csv").string()));
  const Scenario sc = io::load_scenario((dir / "scenario.json").string());
  EXPECT_EQ(d.header.scenario_hash, io::scenario_hash(sc));
  EXPECT_EQ(d.count(RecordKind::imu), truth.size());

  const fs::path again = temp_dir("sim2");
  ASSERT_EQ(run_cli("simulate --scenario " + scenario("full_excitation") + " --out " + again.string()), 0);
  EXPECT_EQ(io::read_text((dir / "dataset.jsonl").string()), io::read_text((again / "dataset.jsonl").string()));

  const fs::path ekf = temp_dir("ekf");
  ASSERT_EQ(run_cli("ekf --scenario " + scenario("full_excitation") + " --dataset " + (dir / "dataset.jsonl").string() +
                    " --truth " + (dir / "truth.csv").string() + " --out " + ekf.string()),
            0);
  EXPECT_TRUE(fs::exists(ekf / "steps.csv"));
  EXPECT_TRUE(fs::exists(ekf / "summary.json"));
  for (const auto& p : {dir, again, ekf}) fs::remove_all(p);
}

TEST(Cli, AnalyzeReportsRank) {
  EXPECT_EQ(run_cli("analyze --scenario " + scenario("full_excitation") + " --require-full-rank --samples 5"), 0);
  EXPECT_EQ(run_cli("analyze --scenario " + scenario("static") + " --require-full-rank --samples 5"), 4);
  const fs::path dir = temp_dir("col");
  ASSERT_EQ(run_cli("analyze --scenario " + scenario("collinear") + " --samples 3 --out " + dir.string()), 0);
  const io::Json j = io::Json::parse(io::read_text((dir / "observability.json").string()));
  EXPECT_FALSE(j["report"]["conditions"]["C1"].get<bool>());
  EXPECT_LT(j["min_rank"].get<int>(), kStateDim);
  fs::remove_all(dir);
}

TEST(Cli, IdentifiabilityVerdicts) {
  EXPECT_EQ(run_cli("identifiability --scenario " + scenario("full_excitation") + " --require-identifiable"), 0);
  EXPECT_EQ(run_cli("identifiability --scenario " + scenario("static") + " --require-identifiable"), 4);
  EXPECT_EQ(run_cli("identifiability --scenario " + scenario("rotation_colocated") + " --require-identifiable"), 4);
}

TEST(Cli, Lemmas) {
  EXPECT_EQ(run_cli("lemmas --samples 0"), 0);
  EXPECT_EQ(run_cli("lemmas --samples 50"), 0);
  const fs::path dir = temp_dir("lem");
  ASSERT_EQ(run_cli("lemmas --coplanar --samples 20 --out " + dir.string()), 0);
  const io::Json j = io::Json::parse(io::read_text((dir / "lemmas_summary.json").string()));
  EXPECT_TRUE(j["lemmas"][0]["expected_degenerate"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "lemmas.csv"));
  fs::remove_all(dir);
}

TEST(Cli, EkfRejectsBadMode) {
  EXPECT_EQ(run_cli("ekf --scenario " + scenario("full_excitation") + " --mode sideways"), 2);
}

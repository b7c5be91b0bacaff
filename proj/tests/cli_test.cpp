/*
 * Copyright 2026 The setcal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Drives the setcal executable end to end through its file formats and exit
// codes.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "setcal/evaluation.hpp"
#include "setcal/record_io.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(SETCAL_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("setcal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Hand fixture: highest admissible scores 0.9, 0.7, 0.5 and one record
  // without any admissible candidate.
  std::string hand_fixture() const {
    const std::string p = path("hand.jsonl");
    spit(p,
         R"({"id":"a","candidates":[{"text":"x","sim_to_gold":1.0,"f_score":0.9},{"text":"y","sim_to_gold":0.0,"f_score":0.95}]})" "\n"
         R"({"id":"b","candidates":[{"text":"x","sim_to_gold":0.8,"f_score":0.7}]})" "\n"
         R"({"id":"c","candidates":[{"text":"x","sim_to_gold":0.75,"f_score":0.5}]})" "\n"
         R"({"id":"d","candidates":[{"text":"x","sim_to_gold":0.1,"f_score":0.8}]})" "\n");
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpDocumentsDefaults) {
  const auto ev = run("evaluate --help");
  EXPECT_EQ(ev.exit_code, 0);
  for (const char* needle : {"--seed", "10", "--split-ratio", "0.5", "--splits", "100",
                             "--grid-step", "0.01", "--tau", "0.7"}) {
    EXPECT_NE(ev.out.find(needle), std::string::npos) << needle;
  }
  EXPECT_EQ(run("calibrate --help").exit_code, 0);
  EXPECT_EQ(run("").exit_code, 1);
  EXPECT_EQ(run("frobnicate").exit_code, 1);
  EXPECT_EQ(run("calibrate --records x.jsonl").exit_code, 1);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run("simulate --n 50 --k 5 --p-adm 0.3 --seed 4 -o " + path("a.jsonl")).exit_code, 0);
  ASSERT_EQ(run("simulate --n 50 --k 5 --p-adm 0.3 --seed 4 -o " + path("b.jsonl")).exit_code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_FALSE(fs::exists(path("a.jsonl.tmp")));
  EXPECT_EQ(setcal::load_records(path("a.jsonl")).size(), 50u);
  EXPECT_EQ(run("simulate --n 5 --p-adm 1.5").exit_code, 1);
  EXPECT_EQ(run("simulate --n 5 --mode bogus").exit_code, 1);
}

TEST_F(CliTest, SimulateCertainOutcomes) {
  ASSERT_EQ(run("simulate --n 20 --k 3 --p-adm 1 -o " + path("p1.jsonl")).exit_code, 0);
  auto j = nlohmann::json::parse(run("calibrate -r " + path("p1.jsonl") + " --alpha 0.3").out);
  EXPECT_EQ(j["alpha_l"].get<double>(), 0.0);
  ASSERT_EQ(run("simulate --n 20 --k 3 --p-adm 0 -o " + path("p0.jsonl")).exit_code, 0);
  j = nlohmann::json::parse(run("calibrate -r " + path("p0.jsonl") + " --alpha 0.9").out);
  EXPECT_DOUBLE_EQ(j["alpha_l"].get<double>(), 20.0 / 21.0);
  EXPECT_FALSE(j["feasible"].get<bool>());
}

TEST_F(CliTest, ScoreFullFeatureFile) {
  ASSERT_EQ(run("simulate --mode full-feature --n 30 --k 6 --p-adm 0.4 -o " + path("ff.jsonl")).exit_code, 0);
  ASSERT_EQ(run("score -r " + path("ff.jsonl") + " -o " + path("scored.jsonl")).exit_code, 0);
  const auto scored = setcal::load_records(path("scored.jsonl"));
  ASSERT_EQ(scored.size(), 30u);
  for (const auto& r : scored) {
    ASSERT_TRUE(r.fully_scored());
    ASSERT_TRUE(r.clusters.has_value());
    for (const auto& c : r.candidates) {
      EXPECT_GE(*c.f_score, 0.0);
      EXPECT_LE(*c.f_score, 1.0);
    }
  }
  ASSERT_EQ(run("score -r " + path("scored.jsonl") + " -o " + path("rescored.jsonl")).exit_code, 0);
  EXPECT_EQ(slurp(path("scored.jsonl")), slurp(path("rescored.jsonl")));
}

TEST_F(CliTest, ScoreDegenerateConfiguration) {
  spit(path("single.jsonl"),
       R"({"id":"s","candidates":[{"text":"a","u_raw":3,"sim_to_gold":0.1},{"text":"b","u_raw":-2,"sim_to_gold":0.9}],)"
       R"("sim_matrix":[[1,0.2],[0.2,1]],"entail_matrix":[[true,false],[false,true]]})" "\n");
  const auto res = run("score -r " + path("single.jsonl") + " --no-uncertainty --no-consistency");
  ASSERT_EQ(res.exit_code, 0);
  std::istringstream in(res.out);
  for (const auto& c : setcal::load_records(in).at(0).candidates) EXPECT_DOUBLE_EQ(*c.f_score, 0.5);
}

TEST_F(CliTest, ScoreMissingFeatureNamesRecord) {
  spit(path("bare.jsonl"), R"({"id":"needs-matrix","candidates":[{"u_raw":1,"sim_to_gold":0.5}]})" "\n");
  const std::string cmd = std::string(SETCAL_CLI_PATH) + " score -r " + path("bare.jsonl") + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[1024] = {0};
  std::string err;
  while (fgets(buf, sizeof(buf), pipe)) err += buf;
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(err.find("needs-matrix"), std::string::npos);
  EXPECT_NE(err.find("sim_matrix"), std::string::npos);
}

TEST_F(CliTest, Calibrate) {
  const std::string hand = hand_fixture();
  auto res = run("calibrate -r " + hand + " --alpha 0.5");
  ASSERT_EQ(res.exit_code, 0);
  auto j = nlohmann::json::parse(res.out);
  EXPECT_DOUBLE_EQ(j["lambda_hat"].get<double>(), 0.5);
  EXPECT_TRUE(j["feasible"].get<bool>());
  EXPECT_EQ(j["loss_curve"].size(), 101u);

  res = run("calibrate -r " + hand + " --alpha 0.05");
  ASSERT_EQ(res.exit_code, 0);
  j = nlohmann::json::parse(res.out);
  EXPECT_FALSE(j["feasible"].get<bool>());
  EXPECT_TRUE(j["lambda_hat"].is_null());

  res = run("calibrate -r " + hand + " --alpha 0.999");
  ASSERT_EQ(res.exit_code, 0);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(res.out)["lambda_hat"].get<double>(), 0.1);

  spit(path("unscored.jsonl"), R"({"id":"u","candidates":[{"u_raw":1,"sim_to_gold":0.5}]})" "\n");
  EXPECT_EQ(run("calibrate -r " + path("unscored.jsonl") + " --alpha 0.5").exit_code, 2);
  spit(path("broken.jsonl"), "{\"id\":\n");
  EXPECT_EQ(run("calibrate -r " + path("broken.jsonl") + " --alpha 0.5").exit_code, 2);
  EXPECT_EQ(run("calibrate -r " + path("missing.jsonl") + " --alpha 0.5").exit_code, 2);
}

TEST_F(CliTest, EvaluateShapeDeterminismAndDedup) {
  ASSERT_EQ(run("simulate --mode full-feature --n 80 --k 8 --p-adm 0.3 -o " + path("ff.jsonl")).exit_code, 0);
  ASSERT_EQ(run("score -r " + path("ff.jsonl") + " -o " + path("scored.jsonl")).exit_code, 0);

  ASSERT_EQ(run("evaluate -r " + path("scored.jsonl") + " --alpha-grid 0.1:0.5:0.1 -o " + path("full.csv")).exit_code, 0);
  const auto rows = read_csv(slurp(path("full.csv")));
  ASSERT_EQ(rows.size(), 1 + 100 * 5u);
  EXPECT_EQ(rows[0].size(), 9u);
  EXPECT_TRUE(fs::exists(path("full.json")));
  const auto summary = nlohmann::json::parse(slurp(path("full.json")));
  EXPECT_EQ(summary["config"]["trials"], 100);
  EXPECT_EQ(summary["aggregates"].size(), 5u);

  const std::string once = "evaluate -r " + path("scored.jsonl") + " --splits 1 --dedup-threshold 0.9 -o ";
  ASSERT_EQ(run(once + path("r1.csv")).exit_code, 0);
  ASSERT_EQ(run(once + path("r2.csv")).exit_code, 0);
  EXPECT_EQ(slurp(path("r1.csv")), slurp(path("r2.csv")));
  const auto dedup_rows = read_csv(slurp(path("r1.csv")));
  ASSERT_EQ(dedup_rows.size(), 1 + 19u);
  for (std::size_t i = 1; i < dedup_rows.size(); ++i) {
    EXPECT_LE(std::stod(dedup_rows[i][4]), std::stod(dedup_rows[i][3]));
  }
  EXPECT_EQ(run("evaluate -r " + path("scored.jsonl") + " --alpha-grid 0.5:0.1:0.1").exit_code, 1);
}

TEST_F(CliTest, SweepK) {
  ASSERT_EQ(run("simulate --n 2000 --k 12 --p-adm 0.2 -o " + path("p2.jsonl")).exit_code, 0);
  const auto res = run("sweep-k -r " + path("p2.jsonl"));
  ASSERT_EQ(res.exit_code, 0);
  const auto rows = read_csv(res.out);
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"k", "alpha_l", "attainability"}));
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_GE(std::stod(rows[i][2]), std::stod(rows[i - 1][2]));
  const double q = std::pow(0.8, 10);
  EXPECT_NEAR(std::stod(rows[10][2]), 1 - q, 3 * std::sqrt(q * (1 - q) / 2000));

  const auto cal = nlohmann::json::parse(run("calibrate -r " + path("p2.jsonl") + " --alpha 0.5").out);
  EXPECT_EQ(rows[12][1], setcal::format_fixed6(cal["alpha_l"].get<double>()));
  EXPECT_EQ(run("sweep-k -r " + path("p2.jsonl") + " --k-list 13").exit_code, 1);
  EXPECT_EQ(run("sweep-k -r " + path("p2.jsonl") + " --k-list 1,x").exit_code, 1);
}

TEST_F(CliTest, Baseline) {
  spit(path("mlg.jsonl"),
       R"({"id":"1","candidates":[{"u_raw":0,"sim_to_gold":0.9}],"mlg":{"text":"m","sim_to_gold":0.9}})" "\n"
       R"({"id":"2","candidates":[{"u_raw":0,"sim_to_gold":0.9}],"mlg":{"text":"m","sim_to_gold":0.1}})" "\n"
       R"({"id":"3","candidates":[{"u_raw":0,"sim_to_gold":0.1}],"mlg":{"text":"m","sim_to_gold":0.1}})" "\n"
       R"({"id":"4","candidates":[{"u_raw":0,"sim_to_gold":0.9}],"mlg":{"text":"m","sim_to_gold":0.9}})" "\n");
  auto res = run("baseline -r " + path("mlg.jsonl"));
  ASSERT_EQ(res.exit_code, 0);
  auto j = nlohmann::json::parse(res.out);
  EXPECT_DOUBLE_EQ(j["mlg_accuracy"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["attainability"].get<double>(), 0.75);

  res = run("baseline -r " + path("mlg.jsonl") + " --tau 0.05 --tau 0.5");
  ASSERT_EQ(res.exit_code, 0);
  j = nlohmann::json::parse(res.out);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_DOUBLE_EQ(j[0]["mlg_accuracy"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j[0]["attainability"].get<double>(), 1.0);

  spit(path("nomlg.jsonl"), R"({"id":"x","candidates":[{"u_raw":0,"sim_to_gold":0.9}]})" "\n");
  EXPECT_EQ(run("baseline -r " + path("nomlg.jsonl")).exit_code, 2);
}

}  // namespace

/*
 * Copyright 2026 The MAMMO Authors.
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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mammo/error.hpp"
#include "mammo/pipeline.hpp"

namespace mammo::pipeline {
namespace {

namespace fs = std::filesystem;

Config small_config() {
  Config c = Config::standard();
  c.set("seed", "11");
  c.set("cohort.n", "400");
  c.set("split.holdout", "80");
  c.set("mtl.lr", "0.001");
  c.set("mtl.epochs", "1");
  c.set("classifier.lr", "0.01");
  c.set("classifier.epochs", "3");
  c.set("classifier.tta", "1");
  c.set("triage.lr", "0.01");
  c.set("triage.epochs", "2");
  c.set("triage.b_max", "1");
  c.set("report.random_allocations", "5");
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mammo_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string("\"") + MAMMO_CLI_PATH + "\" --out \"" + out.string() +
                          "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class SmallRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    one_ = fresh_dir("t1");
    three_ = fresh_dir("t3");
    for (auto [dir, threads] : {std::pair{one_, std::size_t{1}}, std::pair{three_, std::size_t{3}}}) {
      Context ctx;
      ctx.config = small_config();
      ctx.out = dir;
      ctx.threads = threads;
      write_resolved_config(ctx);
      run_all(ctx);
    }
  }
  static fs::path one_, three_;
};
fs::path SmallRun::one_;
fs::path SmallRun::three_;

TEST_F(SmallRun, WritesEveryArtifact) {
  for (const char* name :
       {artifact::kResolvedConfig, artifact::kCohort, artifact::kPartition, artifact::kMtlModel,
        artifact::kFeaturesTest, artifact::kClassifierModel, artifact::kPolicy,
        artifact::kEvaluation, artifact::kCurveValidation, artifact::kAgreement,
        artifact::kWorkload, artifact::kComparison, artifact::kDensityVariance, artifact::kCurve,
        artifact::kCurvePlot, artifact::kSaliencyPlot, artifact::kSummary}) {
    EXPECT_TRUE(fs::exists(one_ / name)) << name;
  }
}

TEST_F(SmallRun, OutputsIndependentOfThreadCount) {
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(one_)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), one_);
    if (rel.filename().string().front() == '.') continue;  // lock file
    ASSERT_TRUE(fs::exists(three_ / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(three_ / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 20u);
}

TEST_F(SmallRun, EvaluateAcceptsThresholdOverride) {
  const fs::path dir = fresh_dir("override");
  fs::copy(one_, dir, fs::copy_options::recursive);
  // w is clamped below 1, so alpha 1 sends everyone to the classifier.
  EXPECT_EQ(run_cli("--seed 11 --set cohort.n=400 --set split.holdout=80 evaluate --alpha 1",
                    dir),
            0);
  const std::string csv = slurp(dir / artifact::kEvaluation);
  EXPECT_NE(csv.find("test,mammo,0.000000"), std::string::npos) << csv;
}

TEST(Stages, MissingPredecessorIsReported) {
  Context ctx;
  ctx.config = small_config();
  ctx.out = fresh_dir("missing");
  fs::create_directories(ctx.out);
  try {
    train_mtl(ctx);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
  }
}

TEST(Stages, OutputLockIsExclusive) {
  const fs::path dir = fresh_dir("lock");
  OutputLock first(dir);
  EXPECT_THROW(OutputLock second(dir), Error);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("cli");
  EXPECT_EQ(run_cli("--set no.such.key=1 generate", dir), 2);
  EXPECT_EQ(run_cli("--set cohort.prevalence=2 generate", dir), 2);
  EXPECT_EQ(run_cli("--threads abc generate", dir), 2);
  EXPECT_EQ(run_cli("train-classifier", dir), 3);
  EXPECT_EQ(run_cli("evaluate", dir), 3);
}

}  // namespace
}  // namespace mammo::pipeline

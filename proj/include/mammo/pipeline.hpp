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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "mammo/config.hpp"

// End-to-end stages. Each stage reads its predecessors' artifacts from the
// output directory (ErrorKind::kMissingArtifact when one is absent) and
// writes its own, so stages can run as separate processes.
namespace mammo::pipeline {

namespace artifact {
inline constexpr const char* kResolvedConfig = "resolved_config.txt";
inline constexpr const char* kCohort = "cohort.csv";
inline constexpr const char* kPartition = "partition.csv";
inline constexpr const char* kMtlModel = "mtl_model.json";
inline constexpr const char* kMtlHistory = "mtl_history.csv";
inline constexpr const char* kFeaturesStage2 = "features_stage2.csv";
inline constexpr const char* kFeaturesStage3 = "features_stage3.csv";
inline constexpr const char* kFeaturesValidation = "features_validation.csv";
inline constexpr const char* kFeaturesTest = "features_test.csv";
inline constexpr const char* kClassifierModel = "classifier_model.json";
inline constexpr const char* kClassifierHistory = "classifier_history.csv";
inline constexpr const char* kTriageModel = "triage_model.json";
inline constexpr const char* kPolicy = "policy.json";
inline constexpr const char* kTriageGrid = "triage_grid.csv";
inline constexpr const char* kEvaluation = "evaluation.csv";
inline constexpr const char* kCurveValidation = "operating_curve_val.csv";
inline constexpr const char* kAgreement = "agreement.csv";
inline constexpr const char* kWorkload = "workload.csv";
inline constexpr const char* kComparison = "comparison.csv";
inline constexpr const char* kDensityVariance = "density_variance.csv";
inline constexpr const char* kCurve = "operating_curve.csv";
inline constexpr const char* kCurvePlot = "operating_curve.svg";
inline constexpr const char* kSaliencyPlot = "saliency.svg";
inline constexpr const char* kSummary = "summary.json";
}  // namespace artifact

struct Context {
  Config config = Config::standard();
  std::filesystem::path out = "out";
  std::size_t threads = 1;
  std::ostream* log = nullptr;  // progress messages; null = silent
};

// Exclusive use of an output directory for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

void write_resolved_config(const Context& ctx);

void generate(const Context& ctx);
void train_mtl(const Context& ctx);
void train_classifier(const Context& ctx);
// Returns true when no feasible policy exists and the trivial
// all-to-radiologist policy was written instead.
bool train_triage(const Context& ctx);

struct EvaluateOptions {
  std::optional<double> alpha;  // override the locked thresholds
  std::optional<double> beta;
};
void evaluate(const Context& ctx, const EvaluateOptions& opts = {});
void sweep(const Context& ctx);
void report(const Context& ctx);

// Every stage in order; returns train_triage()'s flag.
bool run_all(const Context& ctx);

}  // namespace mammo::pipeline

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

#include <cstddef>
#include <cstdint>
#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mammo/config.hpp"
#include "mammo/labels.hpp"
#include "mammo/metrics.hpp"

// Stratified analyses over evaluated patients and their CSV emitters.
// Metrics that are undefined for a row (no positives, say) are written as
// "nan".
namespace mammo::report {

struct PatientResult {
  std::int64_t id = 0;
  int age = 57;
  bool family_history = false;
  RecallType recall = RecallType::kTwoReaders;
  Sign sign = Sign::kNone;
  int suspicion = 0;
  int conspicuity = 0;
  double mean_density = 0.0;  // annotated VAS %
  int outcome = 0;
  int rad_diagnosis = 0;
  double classifier_prob = 0.0;
  bool to_radiologist = true;
  int system_decision = 0;
};

struct Stratum {
  std::string name;
  std::function<bool(const PatientResult&)> member;
};

// All patients; conspicuity; sign; suspicion; density; family history; age;
// recall type.
std::vector<Stratum> standard_strata(const ReportSettings& settings);

struct AgreementRow {
  std::string population;
  std::size_t n = 0;
  // R+C+, R+C-, R-C+, R-C- where "+" is a correct diagnosis.
  std::array<double, 4> fractions{};
};

struct WorkloadRow {
  std::string population;
  std::size_t n = 0;
  double pct_to_radiologist = 0.0;
  metrics::ConfusionCounts radiologist;
  metrics::ConfusionCounts system;
};

// The classifier is positive when its probability is >= threshold.
std::vector<AgreementRow> agreement_table(std::span<const PatientResult> patients,
                                          std::span<const Stratum> strata, double threshold,
                                          std::vector<std::string>* omitted = nullptr);
std::vector<WorkloadRow> workload_table(std::span<const PatientResult> patients,
                                        std::span<const Stratum> strata,
                                        std::vector<std::string>* omitted = nullptr);

struct ComparisonRow {
  std::string name;
  // Absent for rows averaged over random draws.
  std::optional<metrics::ConfusionCounts> counts;
  double frac_to_radiologist = 0.0;
  double kappa = 0.0;
  double f1 = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
};

ComparisonRow comparison_row(std::string name, const metrics::ConfusionCounts& c,
                             double frac_to_radiologist);

// Sends `reads` uniformly drawn patients to the radiologist and the rest to
// the classifier at beta; metrics averaged over `allocations` draws.
ComparisonRow random_allocation(std::span<const PatientResult> patients, std::size_t reads,
                                double beta, std::size_t allocations, std::uint64_t seed);

struct VarianceRow {
  std::string population;
  std::size_t n = 0;
  double mean_density_variance = 0.0;  // VAS %^2
  double mean_age_variance = 0.0;      // years^2
};

// Metric or NaN when undefined.
double kappa_or_nan(const metrics::ConfusionCounts& c);
double f1_or_nan(const metrics::ConfusionCounts& c);
std::string format_metric(double v);

void write_agreement(const std::filesystem::path& path, std::span<const AgreementRow> rows);
void write_workload(const std::filesystem::path& path, std::span<const WorkloadRow> rows);
void write_comparison(const std::filesystem::path& path, std::span<const ComparisonRow> rows);
void write_variance(const std::filesystem::path& path, std::span<const VarianceRow> rows);

}  // namespace mammo::report

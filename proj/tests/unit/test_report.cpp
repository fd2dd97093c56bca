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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mammo/error.hpp"
#include "mammo/report.hpp"
#include "mammo/svg.hpp"

namespace mammo::report {
namespace {

namespace fs = std::filesystem;

PatientResult patient(int outcome, int rad, double prob) {
  PatientResult p;
  p.outcome = outcome;
  p.rad_diagnosis = rad;
  p.classifier_prob = prob;
  p.system_decision = rad;
  return p;
}

std::vector<PatientResult> six_patients() {
  return {patient(1, 1, 0.8), patient(1, 0, 0.7), patient(0, 0, 0.2),
          patient(0, 1, 0.6), patient(0, 0, 0.9), patient(1, 1, 0.1)};
}

std::vector<Stratum> everyone() {
  return {{"All patients", [](const PatientResult&) { return true; }},
          {"Nobody", [](const PatientResult&) { return false; }}};
}

std::vector<triage::OperatingPoint> small_curve() {
  std::vector<triage::OperatingPoint> pts(3);
  pts[0] = {1.0, 0.0, 0.40, 0.10, 0.5, 0.6, {}};
  pts[1] = {0.5, 0.5, 0.30, 0.05, 0.6, 0.7, {}};
  pts[2] = {0.0, 1.0, 0.20, 0.04, 0.7, 0.8, {}};
  return pts;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TEST(Agreement, SixPatientHandCase) {
  std::vector<std::string> omitted;
  const auto rows = agreement_table(six_patients(), everyone(), 0.5, &omitted);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n, 6u);
  EXPECT_DOUBLE_EQ(rows[0].fractions[0], 2.0 / 6.0);  // both right
  EXPECT_DOUBLE_EQ(rows[0].fractions[1], 2.0 / 6.0);  // radiologist only
  EXPECT_DOUBLE_EQ(rows[0].fractions[2], 1.0 / 6.0);  // classifier only
  EXPECT_DOUBLE_EQ(rows[0].fractions[3], 1.0 / 6.0);  // both wrong
  EXPECT_EQ(omitted, (std::vector<std::string>{"Nobody"}));
}

TEST(Agreement, FractionsSumToOneOnStandardStrata) {
  std::vector<PatientResult> ps;
  for (int i = 0; i < 60; ++i) {
    PatientResult p = patient(i % 4 == 0, i % 3 == 0, (i % 10) / 10.0);
    p.age = 45 + i % 25;
    p.sign = static_cast<Sign>(i % 6);
    p.conspicuity = i % 4;
    p.suspicion = i % 5;
    p.mean_density = 10.0 + i;
    p.family_history = i % 7 == 0;
    p.recall = static_cast<RecallType>(i % 3);
    ps.push_back(p);
  }
  const auto strata = standard_strata(ReportSettings{});
  EXPECT_EQ(strata.front().name, "All patients");
  const auto rows = agreement_table(ps, strata, 0.5);
  EXPECT_EQ(rows.size(), strata.size());
  for (const auto& r : rows) {
    EXPECT_NEAR(r.fractions[0] + r.fractions[1] + r.fractions[2] + r.fractions[3], 1.0, 1e-12)
        << r.population;
  }
  const auto none = std::find_if(rows.begin(), rows.end(),
                                 [](const AgreementRow& r) { return r.population == "No sign of cancer"; });
  ASSERT_NE(none, rows.end());
  EXPECT_EQ(none->n, 10u);
}

TEST(Workload, AllToRadiologistMatchesRadiologist) {
  auto ps = six_patients();
  const auto rows = workload_table(ps, everyone());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].pct_to_radiologist, 100.0);
  EXPECT_EQ(rows[0].system, rows[0].radiologist);
  for (auto& p : ps) {
    p.to_radiologist = false;
    p.system_decision = p.classifier_prob >= 0.5;
  }
  const auto none = workload_table(ps, everyone());
  EXPECT_DOUBLE_EQ(none[0].pct_to_radiologist, 0.0);
  EXPECT_EQ(none[0].system.tp, 2);
  EXPECT_EQ(none[0].system.fp, 2);
}

TEST(Comparison, UndefinedMetricsAreNan) {
  metrics::ConfusionCounts c;
  c.tn = 5;
  const ComparisonRow r = comparison_row("x", c, 1.0);
  EXPECT_TRUE(std::isnan(r.fnr));
  EXPECT_DOUBLE_EQ(r.fpr, 0.0);
  EXPECT_EQ(format_metric(r.fnr), "nan");
  EXPECT_EQ(format_metric(0.25), "0.250000");
}

TEST(RandomAllocation, EndpointsAndDeterminism) {
  const auto ps = six_patients();
  metrics::ConfusionCounts rad;
  for (const auto& p : ps) metrics::tally(rad, p.rad_diagnosis == 1, p.outcome == 1);
  const ComparisonRow all = random_allocation(ps, ps.size(), 0.5, 10, 1);
  EXPECT_DOUBLE_EQ(all.kappa, kappa_or_nan(rad));
  EXPECT_FALSE(all.counts.has_value());
  EXPECT_DOUBLE_EQ(all.frac_to_radiologist, 1.0);
  const ComparisonRow a = random_allocation(ps, 3, 0.5, 20, 7);
  const ComparisonRow b = random_allocation(ps, 3, 0.5, 20, 7);
  EXPECT_EQ(a.kappa, b.kappa);
  EXPECT_EQ(a.f1, b.f1);
  EXPECT_THROW(random_allocation(ps, 7, 0.5, 10, 1), Error);
  EXPECT_THROW(random_allocation(ps, 3, 0.5, 0, 1), Error);
}

TEST(Writers, ComparisonCsv) {
  const fs::path dir = fs::temp_directory_path() / "mammo_report_test";
  fs::create_directories(dir);
  metrics::ConfusionCounts c{1, 2, 3, 4};
  std::vector<ComparisonRow> rows{comparison_row("Radiologist", c, 1.0)};
  ComparisonRow avg = rows[0];
  avg.name = "Classifier-random";
  avg.counts.reset();
  rows.push_back(avg);
  write_comparison(dir / "c.csv", rows);
  const std::string text = slurp(dir / "c.csv");
  EXPECT_NE(text.find("Radiologist,"), std::string::npos);
  std::istringstream is(text);
  std::string header, first, second;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, second);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(second.begin(), second.end(), ','));
}

TEST(Svg, OperatingCurveMatchesGoldenFile) {
  const std::string got = svg::operating_curve(small_curve(), {0.2, 0.04, 0.5});
  const std::string want = slurp(fs::path(MAMMO_FIXTURE_DIR) / "operating_curve.svg");
  EXPECT_EQ(got, want);
}

TEST(Svg, EmptyCurveIsAnError) {
  EXPECT_THROW(svg::operating_curve({}, {}), Error);
}

TEST(Svg, SaliencyDocumentShape) {
  image::GrayImage img(4, 3, 0.5), heat(4, 3, 0.0);
  heat.at(1, 1) = 2.0;
  const std::string doc = svg::saliency(img, heat, "view");
  EXPECT_NE(doc.find("<svg"), std::string::npos);
  EXPECT_NE(doc.find("</svg>"), std::string::npos);
  EXPECT_NE(doc.find("view"), std::string::npos);
}

}  // namespace
}  // namespace mammo::report

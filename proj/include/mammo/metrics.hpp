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
#include <span>
#include <utility>
#include <vector>

// Binary-classification metrics. All arithmetic is double precision and every
// function is pure. Rates with zero denominators raise mammo::Error instead of
// returning 0 so that constraint checks downstream never see a silent value.
namespace mammo::metrics {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const noexcept { return tp + tn + fp + fn; }
  std::int64_t positives() const noexcept { return tp + fn; }
  std::int64_t negatives() const noexcept { return tn + fp; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) {
    return a += b;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Adds one (prediction, outcome) pair.
void tally(ConfusionCounts& counts, bool predicted, bool actual) noexcept;

struct ScoredSample {
  double score = 0.0;
  int label = 0;
};

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

// Points ordered by non-decreasing x.
struct Curve {
  std::vector<CurvePoint> points;
};

// Counts with "score >= threshold" predicted positive.
ConfusionCounts confusion(std::span<const ScoredSample> samples, double threshold);

struct Rates {
  double fnr = 0.0;
  double fpr = 0.0;
};

Rates fnr_fpr(const ConfusionCounts& c);
double f1(const ConfusionCounts& c);
double cohen_kappa(const ConfusionCounts& c);
double accuracy(const ConfusionCounts& c);

// Mann-Whitney probability P(pos > neg) + 0.5 P(tie), computed by a sorted
// threshold sweep.
double auroc(std::span<const ScoredSample> samples);

// Step-wise average precision: sum over descending distinct thresholds of
// (recall_k - recall_{k-1}) * precision_k. No interpolation.
double auprc(std::span<const ScoredSample> samples);

// ROC curve (x = FPR, y = TPR) from (0,0) to (1,1), one point per distinct
// score. trapezoid_area() of the result equals auroc().
Curve roc_curve(std::span<const ScoredSample> samples);

// PR curve (x = recall, y = precision), one point per distinct score, preceded
// by (0, precision at the highest threshold). step_area() equals auprc().
Curve pr_curve(std::span<const ScoredSample> samples);

double trapezoid_area(const Curve& curve);
double step_area(const Curve& curve);

// Convenience builder from parallel score/label ranges.
std::vector<ScoredSample> make_samples(std::span<const double> scores,
                                       std::span<const int> labels);

}  // namespace mammo::metrics

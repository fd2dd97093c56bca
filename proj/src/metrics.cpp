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

#include "mammo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mammo/error.hpp"

namespace mammo::metrics {
namespace {

void validate(std::span<const ScoredSample> samples) {
  if (samples.empty()) fail("no samples");
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) fail("non-finite score");
    if (s.label != 0 && s.label != 1) fail("label must be 0 or 1");
  }
}

// Samples sorted by descending score, grouped into runs of equal score.
struct Sweep {
  std::vector<ScoredSample> sorted;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};

Sweep make_sweep(std::span<const ScoredSample> samples) {
  validate(samples);
  Sweep sweep;
  sweep.sorted.assign(samples.begin(), samples.end());
  std::stable_sort(sweep.sorted.begin(), sweep.sorted.end(),
                   [](const ScoredSample& a, const ScoredSample& b) {
                     return a.score > b.score;
                   });
  for (const auto& s : sweep.sorted) {
    if (s.label == 1) {
      ++sweep.positives;
    } else {
      ++sweep.negatives;
    }
  }
  return sweep;
}

// Calls visit(tp, fp) after each group of tied scores, highest first.
template <typename Visit>
void for_each_threshold(const Sweep& sweep, Visit&& visit) {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  const auto& s = sweep.sorted;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j].score == s[i].score) {
      if (s[j].label == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++j;
    }
    visit(tp, fp);
    i = j;
  }
}

}  // namespace

void tally(ConfusionCounts& counts, bool predicted, bool actual) noexcept {
  if (predicted) {
    actual ? ++counts.tp : ++counts.fp;
  } else {
    actual ? ++counts.fn : ++counts.tn;
  }
}

ConfusionCounts confusion(std::span<const ScoredSample> samples,
                          double threshold) {
  validate(samples);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail("threshold must be in [0, 1]");
  }
  ConfusionCounts c;
  for (const auto& s : samples) tally(c, s.score >= threshold, s.label == 1);
  return c;
}

Rates fnr_fpr(const ConfusionCounts& c) {
  if (c.positives() <= 0 || c.negatives() <= 0) fail("undefined rate");
  return {static_cast<double>(c.fn) / static_cast<double>(c.positives()),
          static_cast<double>(c.fp) / static_cast<double>(c.negatives())};
}

double f1(const ConfusionCounts& c) {
  const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom <= 0) fail("F1 undefined");
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double cohen_kappa(const ConfusionCounts& c) {
  const std::int64_t n = c.total();
  if (n <= 0) fail("no samples");
  const double total = static_cast<double>(n);
  const double observed = static_cast<double>(c.tp + c.tn) / total;
  const double pred_pos = static_cast<double>(c.tp + c.fp);
  const double pred_neg = static_cast<double>(c.tn + c.fn);
  const double expected =
      (pred_pos * static_cast<double>(c.positives()) +
       pred_neg * static_cast<double>(c.negatives())) /
      (total * total);
  if (expected >= 1.0) fail("kappa undefined (degenerate marginals)");
  return (observed - expected) / (1.0 - expected);
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() <= 0) fail("no samples");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

Curve roc_curve(std::span<const ScoredSample> samples) {
  const Sweep sweep = make_sweep(samples);
  if (sweep.positives == 0 || sweep.negatives == 0) fail("AUROC undefined");
  const double pos = static_cast<double>(sweep.positives);
  const double neg = static_cast<double>(sweep.negatives);
  Curve curve;
  curve.points.push_back({0.0, 0.0});
  for_each_threshold(sweep, [&](std::int64_t tp, std::int64_t fp) {
    curve.points.push_back(
        {static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
  });
  return curve;
}

Curve pr_curve(std::span<const ScoredSample> samples) {
  const Sweep sweep = make_sweep(samples);
  if (sweep.positives == 0) fail("AUPRC undefined");
  const double pos = static_cast<double>(sweep.positives);
  Curve curve;
  for_each_threshold(sweep, [&](std::int64_t tp, std::int64_t fp) {
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (curve.points.empty()) curve.points.push_back({0.0, precision});
    curve.points.push_back({static_cast<double>(tp) / pos, precision});
  });
  return curve;
}

double trapezoid_area(const Curve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.x - a.x) * (a.y + b.y) * 0.5;
  }
  return area;
}

double step_area(const Curve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    area += (curve.points[i].x - curve.points[i - 1].x) * curve.points[i].y;
  }
  return area;
}

double auroc(std::span<const ScoredSample> samples) {
  return trapezoid_area(roc_curve(samples));
}

double auprc(std::span<const ScoredSample> samples) {
  return step_area(pr_curve(samples));
}

std::vector<ScoredSample> make_samples(std::span<const double> scores,
                                       std::span<const int> labels) {
  if (scores.size() != labels.size()) fail("score/label length mismatch");
  std::vector<ScoredSample> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = {scores[i], labels[i]};
  return out;
}

}  // namespace mammo::metrics

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
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "mammo/fusion.hpp"
#include "mammo/metrics.hpp"
#include "mammo/mlp.hpp"

// Triage: a network scoring how much each patient needs the radiologist, and
// the constrained search that picks the thresholds minimizing radiologist
// reads without worsening the radiologist's FNR or FPR.
namespace mammo::triage {

// Fusion input plus the classifier probability.
inline constexpr std::size_t kTriageInput = fusion::kFusionSize + 1;

// Dense 64-32 with rectifiers, one sigmoid output.
nn::MlpArch triage_arch(std::size_t input = kTriageInput,
                        std::vector<std::size_t> hidden = {64, 32}, double dropout = 0.0);

class TriageNet {
 public:
  TriageNet() = default;
  explicit TriageNet(nn::Mlp mlp);
  static TriageNet init(const nn::MlpArch& arch, std::uint64_t seed);
  static TriageNet zeros(const nn::MlpArch& arch);

  // w in [0, 1): probability that the radiologist must read the case. The
  // upper end is pulled just below 1 so that alpha = 1 always means
  // "classifier only".
  double forward(std::span<const double> input) const;
  std::vector<double> forward_batch(std::span<const double> inputs, std::size_t batch) const;

  const nn::Mlp& mlp() const noexcept { return mlp_; }
  nn::Mlp& mlp() noexcept { return mlp_; }

  friend bool operator==(const TriageNet&, const TriageNet&) = default;

 private:
  nn::Mlp mlp_;
};

struct TriageSample {
  std::int64_t id = 0;
  std::vector<double> features;  // kTriageInput values
  double classifier_prob = 0.0;
  int rad_diagnosis = 0;
  int outcome = 0;
};

TriageSample make_sample(const fusion::FeatureRow& row, double classifier_prob);
std::vector<TriageSample> make_samples(std::span<const fusion::FeatureRow> rows,
                                       const fusion::ClassifierNet& classifier);

// w >= alpha goes to the radiologist; otherwise the classifier decides with
// "probability >= beta" as positive.
bool to_radiologist(double w, double alpha) noexcept;
int system_decision(double w, int rad_diagnosis, double classifier_prob, double alpha,
                    double beta) noexcept;

// Inputs are parallel per-patient arrays.
metrics::ConfusionCounts system_confusion(std::span<const double> w,
                                          std::span<const int> rad_diagnosis,
                                          std::span<const double> classifier_prob,
                                          std::span<const int> outcome, double alpha,
                                          double beta);

metrics::ConfusionCounts radiologist_confusion(std::span<const TriageSample> samples);
metrics::ConfusionCounts classifier_confusion(std::span<const TriageSample> samples, double beta);

// Same staged schedule and dropout as the classifier.
struct CandidateSchedule {
  std::vector<mtl::Stage> stages{{1e-2, 10}, {1e-3, 10}};
  std::size_t batch_size = 32;
  double momentum = 0.9;
  // Classifier correctness indicator uses this probability cut.
  double label_threshold = 0.5;
  double dropout = 0.2;

  void validate() const;
};

// Mean weighted triage loss over the batch with w the raw sigmoid output;
// l_R / l_C flag radiologist / classifier errors.
double triage_loss(const nn::Mlp& net, std::span<const double> inputs,
                   std::span<const int> l_R, std::span<const int> l_C, double b_R,
                   double b_C, nn::Gradients* grads, Rng* dropout_rng = nullptr);

TriageNet train_candidate(std::span<const TriageSample> train, double b_R, double b_C,
                          const CandidateSchedule& schedule, std::uint64_t seed);

// A candidate routes x to the radiologist only where b_C * P(l_C = 1 | x)
// exceeds 1 + b_R * P(l_R = 1 | x), so b_max must reach past the inverse of
// the classifier error rate.
struct GridSpec {
  double delta = 1.0;
  double b_max = 8.0;

  void validate() const;
  // 0, delta, 2 delta, ... up to b_max (inclusive within rounding).
  std::vector<double> values() const;
};

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t i_R, std::size_t i_C) noexcept;

// Sorted distinct values plus the endpoints 0 and 1.
std::vector<double> threshold_candidates(std::span<const double> scores);

struct ThresholdChoice {
  bool feasible = false;
  double alpha = 0.0;
  double beta = 0.5;
  std::int64_t reads = 0;
  metrics::ConfusionCounts counts;
};

// Fewest radiologist reads among (alpha, beta) over threshold_candidates of w
// and of the classifier probabilities such that fn <= fn_limit and
// fp <= fp_limit, excluding the all-to-radiologist case. Ties go to lower FN,
// then lower FP, then larger alpha and smaller beta.
ThresholdChoice best_thresholds(std::span<const double> w, std::span<const int> rad_diagnosis,
                                std::span<const double> classifier_prob,
                                std::span<const int> outcome, std::int64_t fn_limit,
                                std::int64_t fp_limit);

struct TriagePolicy {
  TriageNet net;
  double alpha = 0.0;
  double beta = 0.5;
  double b_R = 0.0;
  double b_C = 0.0;
  bool constraint_bound = false;  // no feasible policy; everyone to the radiologist

  double weight(const TriageSample& s) const { return net.forward(s.features); }
  int decide(const TriageSample& s) const;
};

metrics::ConfusionCounts system_confusion(const TriagePolicy& policy,
                                          std::span<const TriageSample> samples);

struct GridEntry {
  double b_R = 0.0;
  double b_C = 0.0;
  ThresholdChoice choice;
};

struct TriageResult {
  TriagePolicy policy;
  std::vector<GridEntry> grid;  // b_R-major order
  metrics::ConfusionCounts radiologist_val;
  metrics::ConfusionCounts policy_val;
  std::vector<TriageNet> candidates;  // same order as grid
};

// Trains one candidate per (b_R, b_C) cell on `train` and locks (alpha, beta)
// on `validation`. The held-out ids are only checked for disjointness.
TriageResult train_triage(std::span<const TriageSample> train,
                          std::span<const TriageSample> validation,
                          std::span<const std::int64_t> held_out_ids, const GridSpec& grid,
                          const CandidateSchedule& schedule, std::uint64_t seed,
                          std::size_t threads = 1);

struct OperatingPoint {
  double alpha = 0.0;
  double frac_to_radiologist = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
  double kappa = 0.0;
  double f1 = 0.0;
  metrics::ConfusionCounts counts;
};

// One point per alpha in threshold_candidates(w), ordered by decreasing alpha
// so the workload fraction is non-decreasing; the first point is
// classifier-only (alpha = 1), the last radiologist-only (alpha = 0).
std::vector<OperatingPoint> operating_curve(std::span<const double> w,
                                            std::span<const int> rad_diagnosis,
                                            std::span<const double> classifier_prob,
                                            std::span<const int> outcome, double beta);
std::vector<OperatingPoint> operating_curve(const TriagePolicy& policy,
                                            std::span<const TriageSample> samples);

void save_operating_curve(const std::filesystem::path& path,
                          std::span<const OperatingPoint> points);

nlohmann::json to_json(const TriagePolicy& policy,
                       const nlohmann::json& extra = nlohmann::json::object());
TriagePolicy policy_from_json(const nlohmann::json& j);

}  // namespace mammo::triage

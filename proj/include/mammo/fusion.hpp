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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mammo/cohort.hpp"
#include "mammo/loss.hpp"
#include "mammo/mlp.hpp"
#include "mammo/mtlnet.hpp"

// Patient-level classifier over the four per-view MTOs plus non-imaging
// features, and the analyses that read MTOs: perturbation saliency and
// cross-view density variance.
namespace mammo::fusion {

inline constexpr std::size_t kNonImaging = 2;  // normalized age, family history
inline constexpr std::size_t kImagingSize = kViewCount * mtl::kMtoSize;
inline constexpr std::size_t kFusionSize = kImagingSize + kNonImaging;

struct FusionInput {
  std::array<mtl::Mto, kViewCount> views;  // MLO-R, MLO-L, CC-R, CC-L
  std::array<double, kNonImaging> nonimaging{};

  // Views in canonical order, then the non-imaging tail.
  std::vector<double> to_vector() const;
  static FusionInput from_span(std::span<const double> v);
};

// Errors with "incomplete study" unless exactly four MTOs are given.
FusionInput assemble(const cohort::PatientRecord& patient, std::span<const mtl::Mto> mtos);
FusionInput assemble(int age, bool family_history, std::span<const mtl::Mto> mtos);

// Input 78, dense 128-64-32-16, dropout 0.2, two-way softmax.
nn::MlpArch classifier_arch(std::size_t input = kFusionSize,
                            std::vector<std::size_t> hidden = {128, 64, 32, 16},
                            double dropout = 0.2);

class ClassifierNet {
 public:
  ClassifierNet() = default;
  explicit ClassifierNet(nn::Mlp mlp);
  static ClassifierNet init(const nn::MlpArch& arch, std::uint64_t seed);
  static ClassifierNet zeros(const nn::MlpArch& arch);

  // Malignancy probability.
  double classify(const FusionInput& fi) const;
  double classify(std::span<const double> input) const;
  std::vector<double> classify_batch(std::span<const double> inputs, std::size_t batch) const;

  const nn::Mlp& mlp() const noexcept { return mlp_; }
  nn::Mlp& mlp() noexcept { return mlp_; }

  friend bool operator==(const ClassifierNet&, const ClassifierNet&) = default;

 private:
  nn::Mlp mlp_;
};

// One patient's classifier input with the quantities later stages need.
struct FeatureRow {
  std::int64_t id = 0;
  FusionInput input;
  int outcome = 0;
  int rad_diagnosis = 0;
};

struct FeatureOptions {
  std::size_t tta = 100;  // 0 = single deterministic pass per view
  image::AugmentSpec augment;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

// Per-view MTOs (TTA with an independent seed per patient and view) fused
// with the patient's non-imaging features.
std::vector<FeatureRow> build_features(const cohort::Cohort& cohort,
                                       std::span<const std::size_t> indices,
                                       const mtl::MtlNet& per_view,
                                       const FeatureOptions& opts);

struct ClassifierSchedule {
  std::vector<mtl::Stage> stages{{1e-2, 10}, {1e-3, 10}};
  double momentum = 0.9;
  std::uint64_t seed = 1;
  loss::FocalParams focal;

  void validate() const;
};

// Batches of four with two malignant and two benign patients.
inline constexpr std::size_t kBalancedBatch = 4;

struct ClassifierTrainResult {
  ClassifierNet best;
  int best_epoch = 0;
  double best_val_auroc = 0.0;
  std::vector<mtl::EpochRecord> history;
};

// Mean focal loss of a batch and, optionally, parameter gradients.
double classifier_loss(const nn::Mlp& net, std::span<const double> inputs,
                       std::span<const int> labels, const loss::FocalParams& focal,
                       Rng* dropout_rng, nn::Gradients* grads);

// Trains on stage-2 feature rows; keeps the checkpoint with the best
// validation AUROC. Both splits need malignant and benign patients.
ClassifierTrainResult train_classifier(const ClassifierNet& initial,
                                       std::span<const FeatureRow> train_rows,
                                       std::span<const FeatureRow> val_rows,
                                       const ClassifierSchedule& schedule);

// Full stage-2 entry point: refuses to run when a stage-2 patient was used to
// train the per-view model (ErrorKind::kDataLeakage, "data leakage"), then
// extracts features through the frozen per-view model and trains.
ClassifierTrainResult train_classifier(const ClassifierNet& initial,
                                       const cohort::Cohort& cohort,
                                       std::span<const std::size_t> stage2,
                                       std::span<const std::size_t> validation,
                                       std::span<const std::int64_t> per_view_train_ids,
                                       const mtl::MtlNet& frozen_per_view,
                                       const FeatureOptions& features,
                                       const ClassifierSchedule& schedule);

void check_disjoint(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                    const char* what);

nlohmann::json to_json(const ClassifierNet& net,
                       const nlohmann::json& extra = nlohmann::json::object());
ClassifierNet classifier_from_json(const nlohmann::json& j);

void save_features(const std::filesystem::path& path, std::span<const FeatureRow> rows);
std::vector<FeatureRow> load_features(const std::filesystem::path& path);

enum class Perturbation {
  kMeanFill,  // set the patch to the image mean
  kAdditive,  // add delta to the patch
};

struct SaliencyOptions {
  std::size_t radius = 1;  // patch side 2 * radius + 1
  std::size_t stride = 1;
  Perturbation mode = Perturbation::kMeanFill;
  double delta = 0.1;
};

using ScoreFn = std::function<double(const image::GrayImage&)>;

// Each pixel receives the mean squared output change over the perturbed
// patches that cover it. Non-negative, same shape as the input.
image::GrayImage saliency(const ScoreFn& score, const image::GrayImage& img,
                          const SaliencyOptions& opts = {});
// Malignancy output of the per-view model as the score.
image::GrayImage saliency(const mtl::MtlNet& net, const image::GrayImage& img,
                          const image::AugmentSpec& preprocess_spec,
                          const SaliencyOptions& opts = {});

// Population variance of the four predicted densities on the 0-100 scale.
double density_variance(std::span<const mtl::Mto> mtos);

}  // namespace mammo::fusion

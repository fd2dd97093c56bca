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
#include <span>
#include <vector>

#include "json.hpp"
#include "mammo/imageproc.hpp"
#include "mammo/labels.hpp"
#include "mammo/loss.hpp"
#include "mammo/mlp.hpp"

// Per-view multi-task model: one view image in, the 19-value multi-task
// output (MTO) out.
namespace mammo::mtl {

inline constexpr std::size_t kMtoSize = kDiagnosisClasses + kSignClasses +
                                        kSuspicionClasses + kConspicuityClasses + 2;
inline constexpr std::size_t kImageWidth = 40;
inline constexpr std::size_t kImageHeight = 52;

struct Mto {
  std::array<double, kDiagnosisClasses> diagnosis{};  // benign, malignant
  std::array<double, kSignClasses> sign{};
  std::array<double, kSuspicionClasses> suspicion{};
  std::array<double, kConspicuityClasses> conspicuity{};
  double density = 0.0;  // fraction of the 0-100 scale
  double age = 0.0;      // normalized over [40, 73]

  double malignant() const noexcept { return diagnosis[1]; }
  std::array<double, kMtoSize> to_array() const noexcept;
  static Mto from_span(std::span<const double> v);
  // Every component in [0, 1] and every categorical head sums to 1.
  bool valid(double tol = 1e-6) const noexcept;

  friend bool operator==(const Mto&, const Mto&) = default;
};

// Element-wise mean; the mean of simplices is a simplex.
Mto average(std::span<const Mto> mtos);

struct ViewLabels {
  int diagnosis = 0;
  int sign = 0;
  int suspicion = 0;
  int conspicuity = 0;
  double density = 0.0;  // [0, 1]
  double age = 0.0;      // [0, 1]
};

// Input 40x52, hidden 128 and 64, six heads in MTO order, dropout 0.2.
nn::MlpArch default_arch();
// Heads in MTO order on top of the given trunk.
nn::MlpArch make_arch(std::size_t input, std::vector<std::size_t> hidden,
                      double dropout);

class MtlNet {
 public:
  MtlNet() = default;
  explicit MtlNet(nn::Mlp mlp);

  static MtlNet init(const nn::MlpArch& arch, std::uint64_t seed);
  static MtlNet zeros(const nn::MlpArch& arch);

  // Inference on already preprocessed input; dropout disabled.
  Mto forward(std::span<const double> input) const;
  std::vector<Mto> forward_batch(std::span<const double> inputs,
                                 std::size_t batch) const;
  // image::preprocess() of the raw [0, 1] image, then forward().
  Mto forward_image(const image::GrayImage& img,
                    const image::AugmentSpec& spec = image::AugmentSpec::disabled()) const;

  const nn::Mlp& mlp() const noexcept { return mlp_; }
  nn::Mlp& mlp() noexcept { return mlp_; }
  std::size_t input_size() const noexcept { return mlp_.arch().input; }

  friend bool operator==(const MtlNet&, const MtlNet&) = default;

 private:
  nn::Mlp mlp_;
};

struct LossOptions {
  loss::TaskWeights weights;
  loss::FocalParams focal;
  // Per-class multipliers for the diagnosis term (inverse frequency).
  std::array<double, kDiagnosisClasses> class_weights{1.0, 1.0};
};

// Mean weighted multi-task loss of a batch given the activated outputs.
// When dlogits is non-null it receives d loss / d logits.
double batch_loss(std::span<const double> outputs, std::span<const ViewLabels> labels,
                  const LossOptions& opts, std::vector<double>* dlogits);

// Loss and parameter gradients for one batch. Dropout is active when rng is
// non-null.
double loss_and_gradients(const nn::Mlp& net, std::span<const double> inputs,
                          std::span<const ViewLabels> labels, const LossOptions& opts,
                          Rng* dropout_rng, nn::Gradients& grads);

// One optimizer step on the batch; returns the pre-step loss. Throws
// ErrorKind::kNumerical "training diverged" on a non-finite loss.
double train_step(MtlNet& net, nn::Sgd& opt, std::span<const double> inputs,
                  std::span<const ViewLabels> labels, const LossOptions& opts,
                  double lr, Rng* dropout_rng);

struct Stage {
  double lr = 1e-2;
  int epochs = 1;
};

struct TrainSchedule {
  std::vector<Stage> stages{{1e-2, 5}, {1e-3, 20}};
  std::size_t batch_size = 16;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  bool class_balance = true;
  image::AugmentSpec augment;
  std::size_t threads = 1;  // augmentation fan-out

  int total_epochs() const noexcept;
  void validate() const;
};

struct ViewDataset {
  std::vector<const image::GrayImage*> images;
  std::vector<ViewLabels> labels;

  std::size_t size() const noexcept { return labels.size(); }
  void add(const image::GrayImage* img, const ViewLabels& l) {
    images.push_back(img);
    labels.push_back(l);
  }
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_auroc = 0.0;
};

struct TrainResult {
  MtlNet best;
  int best_epoch = 0;
  double best_val_auroc = 0.0;
  std::vector<EpochRecord> history;
};

// Mini-batch training with per-sample augmentation; returns the checkpoint
// with the highest validation diagnosis AUROC seen at any epoch end.
TrainResult train(const MtlNet& initial, const ViewDataset& train_set,
                  const ViewDataset& val_set, const TrainSchedule& schedule,
                  const LossOptions& loss_opts);

// Diagnosis AUROC of un-augmented (preprocessed) predictions.
double diagnosis_auroc(const MtlNet& net, const ViewDataset& data,
                       const image::AugmentSpec& spec, std::size_t threads = 1);

// Mean of n forward passes over independently augmented copies
// (full_pipeline with seeds derived from `seed`).
Mto predict_tta(const MtlNet& net, const image::GrayImage& img, std::size_t n,
                const image::AugmentSpec& augment, std::uint64_t seed);

// Versioned envelope with component tag "mtlnet".
nlohmann::json to_json(const MtlNet& net,
                       const nlohmann::json& extra = nlohmann::json::object());
MtlNet mtlnet_from_json(const nlohmann::json& j);

}  // namespace mammo::mtl

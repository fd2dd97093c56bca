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

#include "mammo/mtlnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mammo/error.hpp"
#include "mammo/metrics.hpp"
#include "mammo/parallel.hpp"
#include "mammo/random.hpp"

namespace mammo::mtl {
namespace {

constexpr std::size_t kDiagOff = 0;
constexpr std::size_t kSignOff = kDiagOff + kDiagnosisClasses;
constexpr std::size_t kSuspOff = kSignOff + kSignClasses;
constexpr std::size_t kConspOff = kSuspOff + kSuspicionClasses;
constexpr std::size_t kDensityOff = kConspOff + kConspicuityClasses;
constexpr std::size_t kAgeOff = kDensityOff + 1;

bool simplex_ok(std::span<const double> p, double tol) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -tol && v <= 1.0 + tol)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

void check_label(int v, std::size_t classes, const char* what) {
  if (v < 0 || static_cast<std::size_t>(v) >= classes) {
    fail(std::string(what) + " label out of range");
  }
}

}  // namespace

std::array<double, kMtoSize> Mto::to_array() const noexcept {
  std::array<double, kMtoSize> v{};
  std::copy(diagnosis.begin(), diagnosis.end(), v.begin() + kDiagOff);
  std::copy(sign.begin(), sign.end(), v.begin() + kSignOff);
  std::copy(suspicion.begin(), suspicion.end(), v.begin() + kSuspOff);
  std::copy(conspicuity.begin(), conspicuity.end(), v.begin() + kConspOff);
  v[kDensityOff] = density;
  v[kAgeOff] = age;
  return v;
}

Mto Mto::from_span(std::span<const double> v) {
  if (v.size() != kMtoSize) fail("MTO must have 19 values");
  Mto m;
  std::copy_n(v.begin() + kDiagOff, kDiagnosisClasses, m.diagnosis.begin());
  std::copy_n(v.begin() + kSignOff, kSignClasses, m.sign.begin());
  std::copy_n(v.begin() + kSuspOff, kSuspicionClasses, m.suspicion.begin());
  std::copy_n(v.begin() + kConspOff, kConspicuityClasses, m.conspicuity.begin());
  m.density = v[kDensityOff];
  m.age = v[kAgeOff];
  return m;
}

bool Mto::valid(double tol) const noexcept {
  return simplex_ok(diagnosis, tol) && simplex_ok(sign, tol) &&
         simplex_ok(suspicion, tol) && simplex_ok(conspicuity, tol) &&
         density >= -tol && density <= 1.0 + tol && age >= -tol && age <= 1.0 + tol;
}

Mto average(std::span<const Mto> mtos) {
  if (mtos.empty()) fail("cannot average zero MTOs");
  std::array<double, kMtoSize> acc{};
  for (const Mto& m : mtos) {
    const auto v = m.to_array();
    for (std::size_t i = 0; i < kMtoSize; ++i) acc[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(mtos.size());
  for (double& a : acc) a *= inv;
  return Mto::from_span(acc);
}

nn::MlpArch make_arch(std::size_t input, std::vector<std::size_t> hidden,
                      double dropout) {
  nn::MlpArch arch;
  arch.input = input;
  arch.hidden = std::move(hidden);
  arch.dropout = dropout;
  arch.heads = {{"diagnosis", nn::HeadKind::kSoftmax, kDiagnosisClasses},
                {"sign", nn::HeadKind::kSoftmax, kSignClasses},
                {"suspicion", nn::HeadKind::kSoftmax, kSuspicionClasses},
                {"conspicuity", nn::HeadKind::kSoftmax, kConspicuityClasses},
                {"density", nn::HeadKind::kSigmoid, 1},
                {"age", nn::HeadKind::kSigmoid, 1}};
  return arch;
}

nn::MlpArch default_arch() {
  return make_arch(kImageWidth * kImageHeight, {128, 64}, 0.2);
}

MtlNet::MtlNet(nn::Mlp mlp) : mlp_(std::move(mlp)) {
  const auto expected = make_arch(mlp_.arch().input, mlp_.arch().hidden, mlp_.arch().dropout);
  if (!(mlp_.arch().heads == expected.heads)) fail("head layout does not match the MTO");
}

MtlNet MtlNet::init(const nn::MlpArch& arch, std::uint64_t seed) {
  return MtlNet(nn::Mlp::glorot(arch, seed));
}

MtlNet MtlNet::zeros(const nn::MlpArch& arch) { return MtlNet(nn::Mlp::zeros(arch)); }

Mto MtlNet::forward(std::span<const double> input) const {
  const auto out = mlp_.predict_one(input);
  return Mto::from_span(out);
}

std::vector<Mto> MtlNet::forward_batch(std::span<const double> inputs,
                                       std::size_t batch) const {
  const auto out = mlp_.predict(inputs, batch);
  std::vector<Mto> mtos;
  mtos.reserve(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    mtos.push_back(Mto::from_span(std::span(out).subspan(s * kMtoSize, kMtoSize)));
  }
  return mtos;
}

Mto MtlNet::forward_image(const image::GrayImage& img, const image::AugmentSpec& spec) const {
  return forward(image::preprocess(img, spec).pixels);
}

double batch_loss(std::span<const double> outputs, std::span<const ViewLabels> labels,
                  const LossOptions& opts, std::vector<double>* dlogits) {
  const std::size_t batch = labels.size();
  if (batch == 0) fail("empty batch");
  if (outputs.size() != batch * kMtoSize) fail("output dimension mismatch");
  loss::validate(opts.weights);
  loss::validate(opts.focal);
  const auto w = opts.weights.as_array();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  if (dlogits != nullptr) dlogits->assign(outputs.size(), 0.0);

  double total = 0.0;
  std::array<double, kMtoSize> grad{};
  for (std::size_t s = 0; s < batch; ++s) {
    const ViewLabels& y = labels[s];
    check_label(y.diagnosis, kDiagnosisClasses, "diagnosis");
    check_label(y.sign, kSignClasses, "sign");
    check_label(y.suspicion, kSuspicionClasses, "suspicion");
    check_label(y.conspicuity, kConspicuityClasses, "conspicuity");
    const double* o = outputs.data() + s * kMtoSize;
    grad.fill(0.0);
    // The class weight scales the diagnosis term only.
    const double cw = opts.class_weights[static_cast<std::size_t>(y.diagnosis)];

    auto head = [&](std::size_t off, std::size_t k, int label, double weight) {
      if (weight == 0.0) return 0.0;
      std::span<double> g(grad.data() + off, k);
      const double l = loss::categorical_focal(std::span(o + off, k), label, opts.focal, g);
      for (double& v : g) v *= weight;
      return weight * l;
    };
    auto regression = [&](std::size_t off, double target, double weight) {
      if (weight == 0.0) return 0.0;
      const double p = o[off];
      grad[off] = weight * loss::mse_grad(p, target) * p * (1.0 - p);
      return weight * loss::mse(p, target);
    };

    double sample = 0.0;
    sample += head(kDiagOff, kDiagnosisClasses, y.diagnosis, w[loss::kDiagnosis] * cw);
    sample += head(kSignOff, kSignClasses, y.sign, w[loss::kSign]);
    sample += head(kSuspOff, kSuspicionClasses, y.suspicion, w[loss::kSuspicion]);
    sample += head(kConspOff, kConspicuityClasses, y.conspicuity, w[loss::kConspicuity]);
    sample += regression(kDensityOff, y.density, w[loss::kDensity]);
    sample += regression(kAgeOff, y.age, w[loss::kAge]);
    total += sample;
    if (dlogits != nullptr) {
      for (std::size_t i = 0; i < kMtoSize; ++i) {
        (*dlogits)[s * kMtoSize + i] = grad[i] * inv_batch;
      }
    }
  }
  return total * inv_batch;
}

double loss_and_gradients(const nn::Mlp& net, std::span<const double> inputs,
                          std::span<const ViewLabels> labels, const LossOptions& opts,
                          Rng* dropout_rng, nn::Gradients& grads) {
  const std::size_t batch = labels.size();
  const auto cache = net.forward_train(inputs, batch, dropout_rng);
  std::vector<double> dlogits;
  const double l = batch_loss(cache.outputs, labels, opts, &dlogits);
  grads.zero();
  net.backward(cache, inputs, dlogits, grads);
  return l;
}

double train_step(MtlNet& net, nn::Sgd& opt, std::span<const double> inputs,
                  std::span<const ViewLabels> labels, const LossOptions& opts,
                  double lr, Rng* dropout_rng) {
  nn::Gradients grads(net.mlp());
  const double l = loss_and_gradients(net.mlp(), inputs, labels, opts, dropout_rng, grads);
  if (!std::isfinite(l)) fail(ErrorKind::kNumerical, "training diverged");
  opt.step(net.mlp(), grads, lr);
  return l;
}

int TrainSchedule::total_epochs() const noexcept {
  int n = 0;
  for (const auto& s : stages) n += s.epochs;
  return n;
}

void TrainSchedule::validate() const {
  if (stages.empty()) fail(ErrorKind::kConfig, "training schedule has no stages");
  double prev = stages.front().lr;
  for (const auto& s : stages) {
    if (!(s.lr > 0.0)) fail(ErrorKind::kConfig, "learning rates must be positive");
    if (s.lr > prev) fail(ErrorKind::kConfig, "learning rates must be non-increasing");
    if (s.epochs < 0) fail(ErrorKind::kConfig, "stage epochs must be >= 0");
    prev = s.lr;
  }
  if (total_epochs() == 0) fail(ErrorKind::kConfig, "training schedule has zero epochs");
  if (batch_size == 0) fail(ErrorKind::kConfig, "batch size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::kConfig, "momentum must be in [0, 1)");
  augment.validate();
}

double diagnosis_auroc(const MtlNet& net, const ViewDataset& data,
                       const image::AugmentSpec& spec, std::size_t threads) {
  if (data.size() == 0) fail("empty validation set");
  constexpr std::size_t kChunk = 64;
  const std::size_t in = net.input_size();
  const std::size_t chunks = (data.size() + kChunk - 1) / kChunk;
  std::vector<metrics::ScoredSample> samples(data.size());
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(data.size(), begin + kChunk);
    std::vector<double> x((end - begin) * in);
    for (std::size_t i = begin; i < end; ++i) {
      const auto std_img = image::preprocess(*data.images[i], spec);
      if (std_img.size() != in) fail("image size does not match network input");
      std::copy(std_img.pixels.begin(), std_img.pixels.end(), x.begin() + (i - begin) * in);
    }
    const auto mtos = net.forward_batch(x, end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      samples[i] = {mtos[i - begin].malignant(), data.labels[i].diagnosis};
    }
  });
  return metrics::auroc(samples);
}

TrainResult train(const MtlNet& initial, const ViewDataset& train_set,
                  const ViewDataset& val_set, const TrainSchedule& schedule,
                  const LossOptions& loss_opts) {
  schedule.validate();
  if (train_set.size() == 0) fail("empty training split");
  if (val_set.size() == 0) fail("empty validation split");
  if (train_set.images.size() != train_set.labels.size()) fail("training set is ragged");

  LossOptions opts = loss_opts;
  if (schedule.class_balance) {
    std::array<double, kDiagnosisClasses> count{};
    for (const auto& l : train_set.labels) {
      check_label(l.diagnosis, kDiagnosisClasses, "diagnosis");
      count[static_cast<std::size_t>(l.diagnosis)] += 1.0;
    }
    const double n = static_cast<double>(train_set.size());
    for (std::size_t c = 0; c < kDiagnosisClasses; ++c) {
      opts.class_weights[c] = count[c] > 0.0 ? n / (kDiagnosisClasses * count[c]) : 1.0;
    }
  }

  MtlNet net = initial;
  nn::Sgd opt(net.mlp(), schedule.momentum);
  nn::Gradients grads(net.mlp());
  Rng dropout_rng(derive_seed(schedule.seed, 0xD0));
  const std::size_t in = net.input_size();

  TrainResult result;
  result.best = net;
  result.best_val_auroc = -1.0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  int epoch = 0;
  for (const Stage& stage : schedule.stages) {
    for (int e = 0; e < stage.epochs; ++e, ++epoch) {
      Rng shuffle_rng(derive_seed(schedule.seed, 0x5F, static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.index(i)]);
      }
      double loss_sum = 0.0;
      std::size_t batches = 0;
      std::vector<double> x;
      std::vector<ViewLabels> y;
      for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size) {
        const std::size_t end = std::min(order.size(), begin + schedule.batch_size);
        const std::size_t b = end - begin;
        x.assign(b * in, 0.0);
        y.resize(b);
        parallel_for(b, schedule.threads, [&](std::size_t k) {
          const std::size_t idx = order[begin + k];
          const auto aug = image::full_pipeline(
              *train_set.images[idx], schedule.augment,
              derive_seed(schedule.seed, static_cast<std::uint64_t>(epoch) + 1, idx));
          if (aug.size() != in) fail("image size does not match network input");
          std::copy(aug.pixels.begin(), aug.pixels.end(), x.begin() + k * in);
        });
        for (std::size_t k = 0; k < b; ++k) y[k] = train_set.labels[order[begin + k]];
        const double l = loss_and_gradients(net.mlp(), x, y, opts, &dropout_rng, grads);
        if (!std::isfinite(l)) fail(ErrorKind::kNumerical, "training diverged");
        opt.step(net.mlp(), grads, stage.lr);
        loss_sum += l;
        ++batches;
      }
      EpochRecord rec;
      rec.epoch = epoch + 1;
      rec.lr = stage.lr;
      rec.train_loss = loss_sum / static_cast<double>(batches);
      rec.val_auroc = diagnosis_auroc(net, val_set, schedule.augment, schedule.threads);
      result.history.push_back(rec);
      if (rec.val_auroc > result.best_val_auroc) {
        result.best_val_auroc = rec.val_auroc;
        result.best_epoch = rec.epoch;
        result.best = net;
      }
    }
  }
  return result;
}

Mto predict_tta(const MtlNet& net, const image::GrayImage& img, std::size_t n,
                const image::AugmentSpec& augment, std::uint64_t seed) {
  if (n == 0) fail("TTA count must be >= 1");
  const std::size_t in = net.input_size();
  if (img.size() != in) fail("image size does not match network input");
  std::vector<double> x(n * in);
  for (std::size_t i = 0; i < n; ++i) {
    const auto aug = image::full_pipeline(img, augment, derive_seed(seed, i));
    std::copy(aug.pixels.begin(), aug.pixels.end(), x.begin() + i * in);
  }
  const auto mtos = net.forward_batch(x, n);
  return average(mtos);
}

nlohmann::json to_json(const MtlNet& net, const nlohmann::json& extra) {
  return nn::model_envelope("mtlnet", net.mlp(), extra);
}

MtlNet mtlnet_from_json(const nlohmann::json& j) {
  return MtlNet(nn::open_envelope(j, "mtlnet"));
}

}  // namespace mammo::mtl

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

#include "mammo/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "mammo/csv.hpp"
#include "mammo/error.hpp"
#include "mammo/metrics.hpp"
#include "mammo/parallel.hpp"
#include "mammo/random.hpp"

namespace mammo::fusion {

std::vector<double> FusionInput::to_vector() const {
  std::vector<double> v;
  v.reserve(kFusionSize);
  for (const auto& m : views) {
    const auto a = m.to_array();
    v.insert(v.end(), a.begin(), a.end());
  }
  v.insert(v.end(), nonimaging.begin(), nonimaging.end());
  return v;
}

FusionInput FusionInput::from_span(std::span<const double> v) {
  if (v.size() != kFusionSize) fail("fusion input must have " + std::to_string(kFusionSize) + " values");
  FusionInput fi;
  for (std::size_t k = 0; k < kViewCount; ++k) {
    fi.views[k] = mtl::Mto::from_span(v.subspan(k * mtl::kMtoSize, mtl::kMtoSize));
  }
  std::copy_n(v.begin() + kImagingSize, kNonImaging, fi.nonimaging.begin());
  return fi;
}

FusionInput assemble(int age, bool family_history, std::span<const mtl::Mto> mtos) {
  if (mtos.size() != kViewCount) fail("incomplete study");
  FusionInput fi;
  std::copy(mtos.begin(), mtos.end(), fi.views.begin());
  fi.nonimaging = {normalize_age(age), family_history ? 1.0 : 0.0};
  return fi;
}

FusionInput assemble(const cohort::PatientRecord& patient, std::span<const mtl::Mto> mtos) {
  return assemble(patient.age, patient.family_history, mtos);
}

nn::MlpArch classifier_arch(std::size_t input, std::vector<std::size_t> hidden, double dropout) {
  nn::MlpArch a;
  a.input = input;
  a.hidden = std::move(hidden);
  a.heads = {{"diagnosis", nn::HeadKind::kSoftmax, kDiagnosisClasses}};
  a.dropout = dropout;
  a.validate();
  return a;
}

ClassifierNet::ClassifierNet(nn::Mlp mlp) : mlp_(std::move(mlp)) {
  const auto& heads = mlp_.arch().heads;
  if (heads.size() != 1 || heads[0].kind != nn::HeadKind::kSoftmax ||
      heads[0].size != kDiagnosisClasses) {
    fail("classifier must end in a two-way softmax");
  }
}

ClassifierNet ClassifierNet::init(const nn::MlpArch& arch, std::uint64_t seed) {
  return ClassifierNet(nn::Mlp::glorot(arch, seed));
}

ClassifierNet ClassifierNet::zeros(const nn::MlpArch& arch) {
  return ClassifierNet(nn::Mlp::zeros(arch));
}

double ClassifierNet::classify(std::span<const double> input) const {
  if (input.size() != mlp_.arch().input) fail("dimension mismatch");
  return mlp_.predict_one(input)[1];
}

double ClassifierNet::classify(const FusionInput& fi) const { return classify(fi.to_vector()); }

std::vector<double> ClassifierNet::classify_batch(std::span<const double> inputs,
                                                  std::size_t batch) const {
  if (inputs.size() != batch * mlp_.arch().input) fail("dimension mismatch");
  const auto out = mlp_.predict(inputs, batch);
  std::vector<double> p(batch);
  for (std::size_t i = 0; i < batch; ++i) p[i] = out[i * kDiagnosisClasses + 1];
  return p;
}

std::vector<FeatureRow> build_features(const cohort::Cohort& cohort,
                                       std::span<const std::size_t> indices,
                                       const mtl::MtlNet& per_view,
                                       const FeatureOptions& opts) {
  opts.augment.validate();
  std::vector<FeatureRow> rows(indices.size());
  parallel_for(indices.size(), opts.threads, [&](std::size_t i) {
    const auto& p = cohort.at(indices[i]);
    std::array<mtl::Mto, kViewCount> mtos;
    for (std::size_t v = 0; v < kViewCount; ++v) {
      if (p.views[v].size() == 0) fail("patient " + std::to_string(p.id) + " has no images loaded");
      mtos[v] = opts.tta == 0
                    ? per_view.forward_image(p.views[v], opts.augment)
                    : mtl::predict_tta(per_view, p.views[v], opts.tta, opts.augment,
                                       derive_seed(opts.seed, static_cast<std::uint64_t>(p.id), v));
    }
    rows[i].id = p.id;
    rows[i].input = assemble(p, mtos);
    rows[i].outcome = p.outcome;
    rows[i].rad_diagnosis = p.rad_diagnosis;
  });
  return rows;
}

void ClassifierSchedule::validate() const {
  if (stages.empty()) fail(ErrorKind::kConfig, "classifier schedule has no stages");
  int total = 0;
  for (const auto& s : stages) {
    if (!(s.lr > 0.0)) fail(ErrorKind::kConfig, "learning rates must be positive");
    if (s.epochs < 0) fail(ErrorKind::kConfig, "stage epochs must be >= 0");
    total += s.epochs;
  }
  if (total == 0) fail(ErrorKind::kConfig, "classifier schedule has zero epochs");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::kConfig, "momentum must be in [0, 1)");
  loss::validate(focal);
}

double classifier_loss(const nn::Mlp& net, std::span<const double> inputs,
                       std::span<const int> labels, const loss::FocalParams& focal,
                       Rng* dropout_rng, nn::Gradients* grads) {
  const std::size_t batch = labels.size();
  if (batch == 0) fail("empty batch");
  const auto cache = net.forward_train(inputs, batch, dropout_rng);
  const double inv = 1.0 / static_cast<double>(batch);
  std::vector<double> dlogits(batch * kDiagnosisClasses);
  double total = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    std::span<double> g(dlogits.data() + s * kDiagnosisClasses, kDiagnosisClasses);
    total += loss::categorical_focal(
        std::span(cache.outputs.data() + s * kDiagnosisClasses, kDiagnosisClasses), labels[s],
        focal, g);
    for (double& v : g) v *= inv;
  }
  if (grads != nullptr) {
    grads->zero();
    net.backward(cache, inputs, dlogits, *grads);
  }
  return total * inv;
}

namespace {

double rows_auroc(const ClassifierNet& net, std::span<const FeatureRow> rows) {
  std::vector<double> x;
  x.reserve(rows.size() * kFusionSize);
  std::vector<int> y;
  for (const auto& r : rows) {
    const auto v = r.input.to_vector();
    x.insert(x.end(), v.begin(), v.end());
    y.push_back(r.outcome);
  }
  const auto p = net.classify_batch(x, rows.size());
  const auto samples = metrics::make_samples(p, y);
  return metrics::auroc(samples);
}

void require_both_classes(std::span<const FeatureRow> rows, const char* what) {
  bool pos = false, neg = false;
  for (const auto& r : rows) (r.outcome == 1 ? pos : neg) = true;
  if (!pos || !neg) fail(std::string(what) + " needs malignant and benign patients");
}

}  // namespace

ClassifierTrainResult train_classifier(const ClassifierNet& initial,
                                       std::span<const FeatureRow> train_rows,
                                       std::span<const FeatureRow> val_rows,
                                       const ClassifierSchedule& schedule) {
  schedule.validate();
  require_both_classes(train_rows, "classifier training set");
  require_both_classes(val_rows, "classifier validation set");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    (train_rows[i].outcome == 1 ? pos : neg).push_back(i);
  }
  std::vector<std::vector<double>> inputs(train_rows.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) inputs[i] = train_rows[i].input.to_vector();
  const std::size_t in = initial.mlp().arch().input;
  if (in != kFusionSize) fail("dimension mismatch");

  ClassifierTrainResult result;
  result.best = initial;
  result.best_val_auroc = -1.0;
  ClassifierNet net = initial;
  nn::Sgd opt(net.mlp(), schedule.momentum);
  nn::Gradients grads(net.mlp());
  Rng dropout_rng(derive_seed(schedule.seed, 0xD0));
  // The minority class is cycled so every sample of the majority class is
  // seen once per epoch.
  const std::size_t half = kBalancedBatch / 2;
  const std::size_t batches = (std::max(pos.size(), neg.size()) + half - 1) / half;

  int epoch = 0;
  for (const auto& stage : schedule.stages) {
    for (int e = 0; e < stage.epochs; ++e) {
      ++epoch;
      Rng shuffle(derive_seed(schedule.seed, 0x5F, static_cast<std::uint64_t>(epoch)));
      auto shuffled = [&](std::vector<std::size_t> v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[shuffle.index(i)]);
        return v;
      };
      const auto P = shuffled(pos);
      const auto N = shuffled(neg);
      std::vector<double> x(kBalancedBatch * in);
      std::vector<int> y(kBalancedBatch);
      double loss_sum = 0.0;
      for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t k = 0; k < kBalancedBatch; ++k) {
          const bool positive = k < half;
          const auto& src = positive ? P : N;
          const std::size_t idx = src[(b * half + k % half) % src.size()];
          std::copy(inputs[idx].begin(), inputs[idx].end(), x.begin() + k * in);
          y[k] = positive ? 1 : 0;
        }
        const double l = classifier_loss(net.mlp(), x, y, schedule.focal, &dropout_rng, &grads);
        if (!std::isfinite(l)) fail(ErrorKind::kNumerical, "training diverged");
        opt.step(net.mlp(), grads, stage.lr);
        loss_sum += l;
      }
      mtl::EpochRecord rec;
      rec.epoch = epoch;
      rec.lr = stage.lr;
      rec.train_loss = loss_sum / static_cast<double>(batches);
      rec.val_auroc = rows_auroc(net, val_rows);
      result.history.push_back(rec);
      if (rec.val_auroc > result.best_val_auroc) {
        result.best_val_auroc = rec.val_auroc;
        result.best_epoch = epoch;
        result.best = net;
      }
    }
  }
  return result;
}

void check_disjoint(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                    const char* what) {
  const std::unordered_set<std::int64_t> seen(a.begin(), a.end());
  for (auto id : b) {
    if (seen.count(id) != 0) {
      fail(ErrorKind::kDataLeakage, std::string("data leakage: patient ") + std::to_string(id) +
                                        " appears in " + what);
    }
  }
}

ClassifierTrainResult train_classifier(const ClassifierNet& initial,
                                       const cohort::Cohort& cohort,
                                       std::span<const std::size_t> stage2,
                                       std::span<const std::size_t> validation,
                                       std::span<const std::int64_t> per_view_train_ids,
                                       const mtl::MtlNet& frozen_per_view,
                                       const FeatureOptions& features,
                                       const ClassifierSchedule& schedule) {
  std::vector<std::int64_t> ids;
  for (auto i : stage2) ids.push_back(cohort.at(i).id);
  check_disjoint(per_view_train_ids, ids, "both the per-view and the classifier training sets");
  const auto train_rows = build_features(cohort, stage2, frozen_per_view, features);
  const auto val_rows = build_features(cohort, validation, frozen_per_view, features);
  return train_classifier(initial, train_rows, val_rows, schedule);
}

nlohmann::json to_json(const ClassifierNet& net, const nlohmann::json& extra) {
  return nn::model_envelope("classifier", net.mlp(), extra);
}

ClassifierNet classifier_from_json(const nlohmann::json& j) {
  return ClassifierNet(nn::open_envelope(j, "classifier"));
}

namespace {

std::vector<std::string> feature_header() {
  std::vector<std::string> h{"id", "outcome", "rad_diagnosis"};
  for (auto v : kAllViews) {
    for (std::size_t k = 0; k < mtl::kMtoSize; ++k) {
      h.push_back(std::string(view_name(v)) + "_" + std::to_string(k));
    }
  }
  h.push_back("age_norm");
  h.push_back("family_history");
  return h;
}

}  // namespace

void save_features(const std::filesystem::path& path, std::span<const FeatureRow> rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  const auto header = feature_header();
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  for (const auto& r : rows) {
    os << r.id << ',' << r.outcome << ',' << r.rad_diagnosis;
    for (double v : r.input.to_vector()) os << ',' << csv::format(v);
    os << '\n';
  }
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

std::vector<FeatureRow> load_features(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto header = feature_header();
  std::vector<std::size_t> idx;
  for (const auto& h : header) idx.push_back(t.column(h));
  std::vector<FeatureRow> rows;
  rows.reserve(t.rows.size());
  std::vector<double> v(kFusionSize);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    FeatureRow row;
    row.id = csv::parse<std::int64_t>(f[idx[0]], line, header[0]);
    row.outcome = csv::parse<int>(f[idx[1]], line, header[1]);
    row.rad_diagnosis = csv::parse<int>(f[idx[2]], line, header[2]);
    for (std::size_t k = 0; k < kFusionSize; ++k) {
      v[k] = csv::parse<double>(f[idx[3 + k]], line, header[3 + k]);
    }
    row.input = FusionInput::from_span(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

image::GrayImage saliency(const ScoreFn& score, const image::GrayImage& img,
                          const SaliencyOptions& opts) {
  if (img.size() == 0) fail("empty image");
  if (opts.stride == 0) fail("saliency stride must be positive");
  const std::size_t w = img.width, h = img.height;
  const double base = score(img);
  double mean = 0.0;
  for (double p : img.pixels) mean += p;
  mean /= static_cast<double>(img.size());

  std::vector<double> sum(img.size(), 0.0);
  std::vector<double> count(img.size(), 0.0);
  const auto r = static_cast<std::ptrdiff_t>(opts.radius);
  image::GrayImage work = img;
  for (std::size_t cy = 0; cy < h; cy += opts.stride) {
    for (std::size_t cx = 0; cx < w; cx += opts.stride) {
      const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(cx) - r));
      const std::size_t y0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(cy) - r));
      const std::size_t x1 = std::min(w, cx + opts.radius + 1);
      const std::size_t y1 = std::min(h, cy + opts.radius + 1);
      auto apply = [&](auto&& change) {
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) change(work.pixels[y * w + x], img.pixels[y * w + x]);
        }
      };
      double sq = 0.0;
      if (opts.mode == Perturbation::kMeanFill) {
        apply([&](double& out, double) { out = mean; });
        const double d = score(work) - base;
        sq = d * d;
      } else {
        // Both signs, so a linear score gives the same map for +delta and -delta.
        apply([&](double& out, double in) { out = in + opts.delta; });
        const double up = score(work) - base;
        apply([&](double& out, double in) { out = in - opts.delta; });
        const double down = score(work) - base;
        sq = 0.5 * (up * up + down * down);
      }
      apply([&](double& out, double in) { out = in; });
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          sum[y * w + x] += sq;
          count[y * w + x] += 1.0;
        }
      }
    }
  }
  image::GrayImage heat(w, h);
  for (std::size_t i = 0; i < heat.size(); ++i) {
    heat.pixels[i] = count[i] > 0.0 ? sum[i] / count[i] : 0.0;
  }
  return heat;
}

image::GrayImage saliency(const mtl::MtlNet& net, const image::GrayImage& img,
                          const image::AugmentSpec& preprocess_spec,
                          const SaliencyOptions& opts) {
  return saliency(
      [&](const image::GrayImage& x) { return net.forward_image(x, preprocess_spec).malignant(); },
      img, opts);
}

double density_variance(std::span<const mtl::Mto> mtos) {
  if (mtos.size() != kViewCount) fail("incomplete study");
  double mean = 0.0;
  for (const auto& m : mtos) mean += 100.0 * m.density;
  mean /= static_cast<double>(kViewCount);
  double var = 0.0;
  for (const auto& m : mtos) {
    const double d = 100.0 * m.density - mean;
    var += d * d;
  }
  return var / static_cast<double>(kViewCount);
}

}  // namespace mammo::fusion

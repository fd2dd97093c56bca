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

#include <cmath>
#include <filesystem>
#include <vector>

#include "mammo/error.hpp"
#include "mammo/fusion.hpp"
#include "mammo/random.hpp"

namespace mammo::fusion {
namespace {

namespace fs = std::filesystem;

mtl::Mto some_mto(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(mtl::kMtoSize);
  for (double& x : v) x = rng.uniform(0.05, 1.0);
  mtl::Mto m = mtl::Mto::from_span(v);
  auto normalize = [](auto& a) {
    double s = 0;
    for (double x : a) s += x;
    for (double& x : a) x /= s;
  };
  normalize(m.diagnosis);
  normalize(m.sign);
  normalize(m.suspicion);
  normalize(m.conspicuity);
  return m;
}

std::vector<FeatureRow> synthetic_rows(std::size_t n, std::uint64_t seed) {
  std::vector<FeatureRow> rows;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRow r;
    r.id = static_cast<std::int64_t>(i);
    r.outcome = i % 3 == 0 ? 1 : 0;
    r.rad_diagnosis = r.outcome;
    std::vector<mtl::Mto> mtos;
    for (std::size_t v = 0; v < kViewCount; ++v) {
      mtl::Mto m = some_mto(seed * 1000 + i * 4 + v);
      // Separable signal in the malignant probability.
      const double p = r.outcome ? rng.uniform(0.5, 0.9) : rng.uniform(0.1, 0.5);
      m.diagnosis = {1.0 - p, p};
      mtos.push_back(m);
    }
    r.input = assemble(50 + static_cast<int>(i % 20), i % 5 == 0, mtos);
    rows.push_back(r);
  }
  return rows;
}

TEST(Fusion, InputLayout) {
  EXPECT_EQ(kFusionSize, 78u);
  std::vector<mtl::Mto> mtos{some_mto(1), some_mto(2), some_mto(3), some_mto(4)};
  const FusionInput fi = assemble(73, true, mtos);
  const auto v = fi.to_vector();
  ASSERT_EQ(v.size(), 78u);
  EXPECT_EQ(v[0], mtos[0].diagnosis[0]);
  EXPECT_EQ(v[19], mtos[1].diagnosis[0]);
  EXPECT_EQ(v[76], 1.0);  // age 73 normalizes to 1
  EXPECT_EQ(v[77], 1.0);
  const FusionInput back = FusionInput::from_span(v);
  EXPECT_EQ(back.to_vector(), v);
  EXPECT_THROW(FusionInput::from_span(std::vector<double>(77)), Error);
}

TEST(Fusion, IncompleteStudyIsRejected) {
  std::vector<mtl::Mto> three{some_mto(1), some_mto(2), some_mto(3)};
  try {
    assemble(60, false, three);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("incomplete study"), std::string::npos);
  }
}

TEST(Fusion, ArchitectureAndZeroNet) {
  const auto a = classifier_arch();
  EXPECT_EQ(a.input, 78u);
  EXPECT_EQ(a.hidden, (std::vector<std::size_t>{128, 64, 32, 16}));
  EXPECT_DOUBLE_EQ(a.dropout, 0.2);
  const ClassifierNet zero = ClassifierNet::zeros(a);
  EXPECT_DOUBLE_EQ(zero.classify(synthetic_rows(1, 1)[0].input), 0.5);
  EXPECT_THROW(zero.classify(std::vector<double>(5)), Error);
}

TEST(Fusion, BatchMatchesSingle) {
  const ClassifierNet net = ClassifierNet::init(classifier_arch(), 3);
  const auto rows = synthetic_rows(5, 2);
  std::vector<double> x;
  for (const auto& r : rows) {
    const auto v = r.input.to_vector();
    x.insert(x.end(), v.begin(), v.end());
  }
  const auto batch = net.classify_batch(x, rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(batch[i], net.classify(rows[i].input), 1e-14);
    EXPECT_GT(batch[i], 0.0);
    EXPECT_LT(batch[i], 1.0);
  }
}

TEST(ClassifierLoss, GradientsMatchFiniteDifferences) {
  ClassifierNet net = ClassifierNet::init(classifier_arch(kFusionSize, {6, 4}, 0.0), 9);
  const auto rows = synthetic_rows(4, 3);
  std::vector<double> x;
  std::vector<int> y;
  for (const auto& r : rows) {
    const auto v = r.input.to_vector();
    x.insert(x.end(), v.begin(), v.end());
    y.push_back(r.outcome);
  }
  nn::Gradients g(net.mlp());
  g.zero();
  classifier_loss(net.mlp(), x, y, {}, nullptr, &g);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t l = 0; l < net.mlp().layers().size(); ++l) {
    for (int part = 0; part < 2; ++part) {
      auto& p = part ? net.mlp().layers()[l].bias : net.mlp().layers()[l].weight;
      const auto& gp = part ? g.layers()[l].bias : g.layers()[l].weight;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = classifier_loss(net.mlp(), x, y, {}, nullptr, nullptr);
        p[i] = saved - h;
        const double down = classifier_loss(net.mlp(), x, y, {}, nullptr, nullptr);
        p[i] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - gp[i]) / std::max(1e-3, std::abs(fd) + std::abs(gp[i])));
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(ClassifierTraining, LearnsAndIsDeterministic) {
  const auto train_rows = synthetic_rows(60, 5);
  const auto val_rows = synthetic_rows(30, 6);
  ClassifierSchedule s;
  s.stages = {{1e-2, 4}, {1e-3, 2}};
  s.seed = 4;
  const ClassifierNet init = ClassifierNet::init(classifier_arch(kFusionSize, {16, 8}, 0.2), 1);
  const auto a = train_classifier(init, train_rows, val_rows, s);
  const auto b = train_classifier(init, train_rows, val_rows, s);
  EXPECT_EQ(a.best, b.best);
  ASSERT_EQ(a.history.size(), 6u);
  EXPECT_GT(a.best_val_auroc, 0.8);
  EXPECT_GE(a.best_epoch, 1);
  EXPECT_LE(a.best_epoch, 6);
}

TEST(ClassifierTraining, NeedsBothClasses) {
  auto rows = synthetic_rows(12, 7);
  std::vector<FeatureRow> benign;
  for (const auto& r : rows) {
    if (r.outcome == 0) benign.push_back(r);
  }
  const ClassifierNet init = ClassifierNet::zeros(classifier_arch());
  EXPECT_THROW(train_classifier(init, benign, rows, {}), Error);
  EXPECT_THROW(train_classifier(init, rows, benign, {}), Error);
}

TEST(ClassifierTraining, StageTwoLeakageIsRefused) {
  const auto cohort = cohort::generate_cohort(12, {}, cohort::ReaderProfile::calibrated(), 3);
  const std::vector<std::size_t> stage2{0, 1, 2, 3, 4, 5}, val{6, 7, 8};
  const std::vector<std::int64_t> per_view_ids{9, 10, 3};
  const mtl::MtlNet per_view = mtl::MtlNet::zeros(mtl::default_arch());
  FeatureOptions fo;
  fo.tta = 0;
  try {
    train_classifier(ClassifierNet::zeros(classifier_arch()), cohort, stage2, val, per_view_ids,
                     per_view, fo, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDataLeakage);
    EXPECT_NE(std::string(e.what()).find("data leakage"), std::string::npos);
  }
}

TEST(Features, BuildIsDeterministicAcrossThreads) {
  const auto cohort = cohort::generate_cohort(6, {}, cohort::ReaderProfile::calibrated(), 4);
  const std::vector<std::size_t> idx{0, 2, 5};
  const mtl::MtlNet net = mtl::MtlNet::init(mtl::make_arch(2080, {4}, 0.0), 2);
  FeatureOptions fo;
  fo.tta = 3;
  fo.seed = 8;
  const auto a = build_features(cohort, idx, net, fo);
  fo.threads = 3;
  const auto b = build_features(cohort, idx, net, fo);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, cohort[idx[i]].id);
    EXPECT_EQ(a[i].input.to_vector(), b[i].input.to_vector());
    EXPECT_EQ(a[i].outcome, cohort[idx[i]].outcome);
  }
}

TEST(Features, CsvRoundTripIsExact) {
  const auto rows = synthetic_rows(7, 9);
  const fs::path dir = fs::temp_directory_path() / "mammo_fusion_test";
  fs::create_directories(dir);
  save_features(dir / "f.csv", rows);
  const auto back = load_features(dir / "f.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].id, rows[i].id);
    EXPECT_EQ(back[i].outcome, rows[i].outcome);
    EXPECT_EQ(back[i].rad_diagnosis, rows[i].rad_diagnosis);
    EXPECT_EQ(back[i].input.to_vector(), rows[i].input.to_vector());
  }
  try {
    load_features(dir / "absent.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
  }
}

TEST(Serialization, ClassifierEnvelope) {
  const ClassifierNet net = ClassifierNet::init(classifier_arch(), 12);
  const auto j = nlohmann::json::parse(to_json(net).dump());
  EXPECT_EQ(classifier_from_json(j), net);
  EXPECT_THROW(mtl::mtlnet_from_json(j), Error);
}

image::GrayImage patterned(std::size_t w, std::size_t h) {
  image::GrayImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = 0.1 + 0.8 * static_cast<double>((i * 7) % 11) / 10.0;
  return img;
}

TEST(Saliency, ConstantScoreGivesZeroHeat) {
  const auto img = patterned(8, 6);
  const auto heat = saliency([](const image::GrayImage&) { return 0.3; }, img);
  EXPECT_EQ(heat.width, 8u);
  EXPECT_EQ(heat.height, 6u);
  for (double v : heat.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Saliency, HeatStaysNearTheScoredRegion) {
  const auto img = patterned(12, 12);
  // The score reads pixel (2, 2) only.
  auto score = [](const image::GrayImage& x) { return x.at(2, 2); };
  const auto heat = saliency(score, img);
  EXPECT_GT(heat.at(2, 2), 0.0);
  for (std::size_t y = 0; y < 12; ++y) {
    for (std::size_t x = 0; x < 12; ++x) {
      EXPECT_GE(heat.at(x, y), 0.0);
      const bool far = x > 4 || y > 4;
      if (far) EXPECT_EQ(heat.at(x, y), 0.0) << x << "," << y;
    }
  }
}

TEST(Saliency, AdditiveModeIgnoresSignOfALinearScore) {
  const auto img = patterned(9, 7);
  SaliencyOptions o;
  o.mode = Perturbation::kAdditive;
  auto f = [](const image::GrayImage& x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(i % 5) * x.pixels[i];
    return s;
  };
  auto g = [&](const image::GrayImage& x) { return -f(x); };
  const auto a = saliency(f, img, o);
  const auto b = saliency(g, img, o);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.pixels[i], b.pixels[i], 1e-9);
}

TEST(Saliency, ZeroNetworkGivesZeroHeat) {
  const mtl::MtlNet net = mtl::MtlNet::zeros(mtl::default_arch());
  const auto heat = saliency(net, patterned(40, 52), image::AugmentSpec::disabled(), {2, 2});
  for (double v : heat.pixels) EXPECT_EQ(v, 0.0);
}

TEST(DensityVariance, HandValue) {
  std::vector<mtl::Mto> mtos(4);
  mtos[0].density = 0.1;
  mtos[1].density = 0.1;
  mtos[2].density = 0.3;
  mtos[3].density = 0.3;
  EXPECT_NEAR(density_variance(mtos), 100.0, 1e-9);
  for (auto& m : mtos) m.density = 0.42;
  EXPECT_NEAR(density_variance(mtos), 0.0, 1e-12);
}

}  // namespace
}  // namespace mammo::fusion

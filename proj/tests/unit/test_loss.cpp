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

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "mammo/error.hpp"
#include "mammo/loss.hpp"

namespace mammo::loss {
namespace {

TEST(PT, Branches) {
  EXPECT_DOUBLE_EQ(p_t(0.7, 1), 0.7);
  EXPECT_DOUBLE_EQ(p_t(0.7, 0), 1.0 - 0.7);
  EXPECT_DOUBLE_EQ(p_t(0.5, 0), p_t(0.5, 1));
  EXPECT_THROW(p_t(0.0, 1), Error);
  EXPECT_THROW(p_t(1.0, 0), Error);
}

TEST(Focal, HandValue) {
  EXPECT_NEAR(focal_loss(0.5, 1, {}), 2.0 * 0.25 * std::log(2.0), 1e-12);
}

TEST(Focal, ReducesToCrossEntropy) {
  const FocalParams ce{1.0, 0.0};
  for (int i = 1; i <= 500; ++i) {
    const double p = i / 501.0;
    EXPECT_NEAR(focal_loss(p, 1, ce), -std::log(p), 1e-12);
    EXPECT_NEAR(focal_loss(p, 0, ce), -std::log(1.0 - p), 1e-12);
    EXPECT_NEAR(focal_grad(p, 1, ce), -1.0 / p, 1e-9 / p);
  }
}

TEST(Focal, NonNegativeAndDecreasingInPt) {
  double prev = INFINITY;
  for (int i = 1; i < 1000; ++i) {
    const double pt = i / 1000.0;
    const double l = focal_loss(pt, 1, {});
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(Focal, GradientMatchesCentralDifference) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> up(0.01, 0.99), ua(0.25, 4.0), ug(0.0, 4.0);
  const double h = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    const double p = up(gen);
    const int y = static_cast<int>(gen() % 2);
    const FocalParams fp{ua(gen), ug(gen)};
    const double fd = (focal_loss(p + h, y, fp) - focal_loss(p - h, y, fp)) / (2.0 * h);
    const double g = focal_grad(p, y, fp);
    EXPECT_LT(std::abs(g - fd), 1e-6 * std::max(1.0, std::abs(fd))) << p << " " << y;
  }
}

TEST(Focal, GradientSymmetry) {
  for (double p : {0.1, 0.3, 0.5, 0.8}) {
    EXPECT_NEAR(focal_grad(p, 0, {}), -focal_grad(1.0 - p, 1, {}), 1e-12);
  }
}

TEST(Mse, Values) {
  EXPECT_EQ(mse(1.0, 1.0), 0.0);
  EXPECT_EQ(mse(0.0, 1.0), 1.0);
  EXPECT_NEAR(mse(0.3, 0.5), 0.04, 1e-15);
  EXPECT_NEAR(mse_grad(0.3, 0.5), -0.4, 1e-15);
}

TEST(TaskWeightsTest, DefaultsSumToTwoOnUnitLosses) {
  const std::array<double, kTaskCount> ones{1, 1, 1, 1, 1, 1};
  EXPECT_NEAR(mtl_loss(ones, TaskWeights{}), 2.0, 1e-12);
}

TEST(TaskWeightsTest, DiagnosisOnlyAndLinearity) {
  const std::array<double, kTaskCount> l{0.7, 3, 3, 3, 3, 3};
  EXPECT_DOUBLE_EQ(mtl_loss(l, TaskWeights::diagnosis_only()), 0.7);
  TaskWeights w;
  TaskWeights w2{2 * w.diagnosis, 2 * w.sign, 2 * w.suspicion, 2 * w.conspicuity, 2 * w.density,
                 2 * w.age};
  EXPECT_NEAR(mtl_loss(l, w2), 2.0 * mtl_loss(l, w), 1e-12);
}

TEST(TaskWeightsTest, DominatedDiagnosisRejected) {
  TaskWeights w;
  w.diagnosis = 0.5;
  const std::array<double, kTaskCount> l{1, 1, 1, 1, 1, 1};
  try {
    mtl_loss(l, w);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("diagnosis weight dominated"), std::string::npos);
  }
}

TEST(CategoricalFocal, GradientMatchesCentralDifference) {
  // Softmax over logits z; loss as a function of z.
  auto softmax = [](const std::vector<double>& z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    std::vector<double> p(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
    for (double& v : p) v /= s;
    return p;
  };
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t k : {2u, 4u, 6u}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> z(k);
      for (double& v : z) v = n(gen);
      const int label = static_cast<int>(gen() % k);
      std::vector<double> g(k);
      categorical_focal(softmax(z), label, {}, g);
      for (std::size_t i = 0; i < k; ++i) {
        auto zp = z, zm = z;
        zp[i] += 1e-6;
        zm[i] -= 1e-6;
        std::vector<double> scratch(k);
        const double fd = (categorical_focal(softmax(zp), label, {}, scratch) -
                           categorical_focal(softmax(zm), label, {}, scratch)) /
                          2e-6;
        EXPECT_NEAR(g[i], fd, 1e-7 + 1e-5 * std::abs(fd));
      }
    }
  }
}

TEST(CategoricalFocal, RejectsBadLabel) {
  const std::vector<double> p{0.5, 0.5};
  std::vector<double> g(2);
  EXPECT_THROW(categorical_focal(p, 2, {}, g), Error);
}

TEST(TriageLoss, HandValues) {
  EXPECT_EQ(triage_sample_loss(0.0, 0, 0, 1.0, 1.0), 0.0);
  EXPECT_EQ(triage_sample_loss(1.0, 1, 0, 2.0, 0.0), 3.0);
  EXPECT_EQ(triage_sample_loss(1.0, 0, 1, 2.0, 5.0), 1.0);
  EXPECT_THROW(triage_sample_loss(1.5, 0, 0, 0, 0), Error);
}

TEST(TriageLoss, MinimizerOverEndpoints) {
  for (double bR : {0.0, 0.5, 2.0}) {
    for (double bC : {0.0, 0.75, 1.5, 3.0}) {
      for (int lR : {0, 1}) {
        for (int lC : {0, 1}) {
          const bool zero_wins =
              triage_sample_loss(0.0, lR, lC, bR, bC) < triage_sample_loss(1.0, lR, lC, bR, bC);
          EXPECT_EQ(zero_wins, bC * lC < 1.0 + bR * lR);
          // Affine in w: slope is the analytic gradient.
          EXPECT_NEAR(triage_sample_loss(0.75, lR, lC, bR, bC) -
                          triage_sample_loss(0.25, lR, lC, bR, bC),
                      0.5 * triage_sample_grad(lR, lC, bR, bC), 1e-12);
        }
      }
    }
  }
}

}  // namespace
}  // namespace mammo::loss

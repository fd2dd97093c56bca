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
#include <span>

// Training losses: focal loss for categorical targets, squared error for the
// regression targets, the weighted multi-task sum, and the per-patient
// triage loss.
namespace mammo::loss {

inline constexpr double kProbabilityEpsilon = 1e-7;

struct FocalParams {
  double alpha = 2.0;  // class-balance factor
  double gamma = 2.0;  // focus parameter
};

void validate(const FocalParams& fp);

// Clamps p into [eps, 1 - eps] before any logarithm is taken.
double clamp_probability(double p) noexcept;

// p if y == 1, else 1 - p. Requires p in (0, 1).
double p_t(double p, int y);

// -alpha * (1 - p_t)^gamma * ln(p_t), with p_t taken from p and y.
double focal_loss(double p, int y, const FocalParams& fp);

// d focal_loss / d p.
double focal_grad(double p, int y, const FocalParams& fp);

double mse(double pred, double target) noexcept;
double mse_grad(double pred, double target) noexcept;

enum Task : int {
  kDiagnosis = 0,
  kSign,
  kSuspicion,
  kConspicuity,
  kDensity,
  kAge,
  kTaskCount
};

struct TaskWeights {
  double diagnosis = 1.0;
  double sign = 0.25;
  double suspicion = 0.25;
  double conspicuity = 0.2;
  double density = 0.15;
  double age = 0.15;

  std::array<double, kTaskCount> as_array() const noexcept {
    return {diagnosis, sign, suspicion, conspicuity, density, age};
  }
  double auxiliary_sum() const noexcept {
    return sign + suspicion + conspicuity + density + age;
  }

  // Diagnosis only; every auxiliary weight zero.
  static TaskWeights diagnosis_only() noexcept {
    return {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  }
};

// Non-negative weights with diagnosis >= sum of the auxiliary weights.
void validate(const TaskWeights& w);

double mtl_loss(std::span<const double, kTaskCount> per_task, const TaskWeights& w);

// One-vs-rest focal loss averaged over the classes of a softmax head, and
// its gradient with respect to the head's logits (written to dlogits).
// probs must be the softmax of the logits.
double categorical_focal(std::span<const double> probs, int label,
                         const FocalParams& fp, std::span<double> dlogits);

// w + b_R * w * l_R + b_C * (1 - w) * l_C, where w is the probability that the
// patient is read by the radiologist and l_R / l_C flag a wrong diagnosis by
// the radiologist / classifier.
double triage_sample_loss(double w, int l_R, int l_C, double b_R, double b_C);

// d triage_sample_loss / d w (constant: the loss is affine in w).
double triage_sample_grad(int l_R, int l_C, double b_R, double b_C) noexcept;

}  // namespace mammo::loss

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

#include "mammo/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mammo/error.hpp"

namespace mammo::loss {

void validate(const FocalParams& fp) {
  if (!(fp.alpha > 0.0)) fail("focal alpha must be positive");
  if (!(fp.gamma >= 0.0)) fail("focal gamma must be non-negative");
}

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

double p_t(double p, int y) {
  if (!(p > 0.0 && p < 1.0)) fail("probability out of range");
  return y == 1 ? p : 1.0 - p;
}

double focal_loss(double p, int y, const FocalParams& fp) {
  const double pt = p_t(p, y);
  return -fp.alpha * std::pow(1.0 - pt, fp.gamma) * std::log(pt);
}

// With q = p_t, FL(q) = -a (1-q)^g ln q and
// dFL/dq = a [ g (1-q)^(g-1) ln q - (1-q)^g / q ].
// dq/dp is +1 for y == 1 and -1 otherwise.
double focal_grad(double p, int y, const FocalParams& fp) {
  const double q = p_t(p, y);
  const double one_minus = 1.0 - q;
  double dq = -std::pow(one_minus, fp.gamma) / q;
  if (fp.gamma != 0.0) {
    dq += fp.gamma * std::pow(one_minus, fp.gamma - 1.0) * std::log(q);
  }
  dq *= fp.alpha;
  return y == 1 ? dq : -dq;
}

double mse(double pred, double target) noexcept {
  const double d = pred - target;
  return d * d;
}

double mse_grad(double pred, double target) noexcept {
  return 2.0 * (pred - target);
}

void validate(const TaskWeights& w) {
  for (double v : w.as_array()) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("task weights must be finite and >= 0");
  }
  // Relative slack so that decimal defaults summing to the diagnosis weight
  // are accepted.
  if (w.diagnosis < w.auxiliary_sum() * (1.0 - 1e-12)) {
    fail("diagnosis weight dominated");
  }
}

double mtl_loss(std::span<const double, kTaskCount> per_task,
                const TaskWeights& w) {
  validate(w);
  const auto weights = w.as_array();
  double total = 0.0;
  for (int t = 0; t < kTaskCount; ++t) total += weights[t] * per_task[t];
  return total;
}

double categorical_focal(std::span<const double> probs, int label,
                         const FocalParams& fp, std::span<double> dlogits) {
  const std::size_t k = probs.size();
  if (label < 0 || static_cast<std::size_t>(label) >= k) fail("class label out of range");
  if (dlogits.size() != k) fail("gradient buffer size mismatch");
  // dL/dp_j for the averaged one-vs-rest losses; the clamp has zero
  // derivative outside [eps, 1 - eps].
  std::vector<double> dprob(k, 0.0);
  double total = 0.0;
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t j = 0; j < k; ++j) {
    const int y = static_cast<int>(j) == label ? 1 : 0;
    const double p = clamp_probability(probs[j]);
    total += focal_loss(p, y, fp) * inv_k;
    const bool clamped = probs[j] != p;
    dprob[j] = clamped ? 0.0 : focal_grad(p, y, fp) * inv_k;
  }
  // Softmax Jacobian: dz_i = p_i (dp_i - sum_j dp_j p_j).
  double inner = 0.0;
  for (std::size_t j = 0; j < k; ++j) inner += dprob[j] * probs[j];
  for (std::size_t i = 0; i < k; ++i) dlogits[i] = probs[i] * (dprob[i] - inner);
  return total;
}

double triage_sample_loss(double w, int l_R, int l_C, double b_R, double b_C) {
  if (!(w >= 0.0 && w <= 1.0)) fail("triage weight must be in [0, 1]");
  return w + b_R * w * l_R + b_C * (1.0 - w) * l_C;
}

double triage_sample_grad(int l_R, int l_C, double b_R, double b_C) noexcept {
  return 1.0 + b_R * l_R - b_C * l_C;
}

}  // namespace mammo::loss

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

#include "mammo/triage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "mammo/csv.hpp"
#include "mammo/error.hpp"
#include "mammo/parallel.hpp"
#include "mammo/random.hpp"

namespace mammo::triage {

nn::MlpArch triage_arch(std::size_t input, std::vector<std::size_t> hidden, double dropout) {
  nn::MlpArch a;
  a.input = input;
  a.hidden = std::move(hidden);
  a.heads = {{"radiologist", nn::HeadKind::kSigmoid, 1}};
  a.dropout = dropout;
  a.validate();
  return a;
}

TriageNet::TriageNet(nn::Mlp mlp) : mlp_(std::move(mlp)) {
  const auto& heads = mlp_.arch().heads;
  if (heads.size() != 1 || heads[0].kind != nn::HeadKind::kSigmoid || heads[0].size != 1) {
    fail("triage network must end in one sigmoid unit");
  }
}

TriageNet TriageNet::init(const nn::MlpArch& arch, std::uint64_t seed) {
  return TriageNet(nn::Mlp::glorot(arch, seed));
}

TriageNet TriageNet::zeros(const nn::MlpArch& arch) { return TriageNet(nn::Mlp::zeros(arch)); }

namespace {

constexpr double kBelowOne = 0x1.fffffffffffffp-1;  // nextafter(1.0, 0.0)

double clamp_weight(double w) { return std::clamp(w, 0.0, kBelowOne); }

}  // namespace

double TriageNet::forward(std::span<const double> input) const {
  if (input.size() != mlp_.arch().input) fail("dimension mismatch");
  return clamp_weight(mlp_.predict_one(input)[0]);
}

std::vector<double> TriageNet::forward_batch(std::span<const double> inputs,
                                             std::size_t batch) const {
  if (inputs.size() != batch * mlp_.arch().input) fail("dimension mismatch");
  auto w = mlp_.predict(inputs, batch);
  for (double& v : w) v = clamp_weight(v);
  return w;
}

TriageSample make_sample(const fusion::FeatureRow& row, double classifier_prob) {
  TriageSample s;
  s.id = row.id;
  s.features = row.input.to_vector();
  s.features.push_back(classifier_prob);
  s.classifier_prob = classifier_prob;
  s.rad_diagnosis = row.rad_diagnosis;
  s.outcome = row.outcome;
  return s;
}

std::vector<TriageSample> make_samples(std::span<const fusion::FeatureRow> rows,
                                       const fusion::ClassifierNet& classifier) {
  std::vector<TriageSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(make_sample(r, classifier.classify(r.input)));
  return out;
}

bool to_radiologist(double w, double alpha) noexcept { return w >= alpha; }

int system_decision(double w, int rad_diagnosis, double classifier_prob, double alpha,
                    double beta) noexcept {
  if (to_radiologist(w, alpha)) return rad_diagnosis;
  return classifier_prob >= beta ? 1 : 0;
}

metrics::ConfusionCounts system_confusion(std::span<const double> w,
                                          std::span<const int> rad_diagnosis,
                                          std::span<const double> classifier_prob,
                                          std::span<const int> outcome, double alpha,
                                          double beta) {
  const std::size_t n = outcome.size();
  if (w.size() != n || rad_diagnosis.size() != n || classifier_prob.size() != n) {
    fail("missing predictions");
  }
  metrics::ConfusionCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    metrics::tally(c, system_decision(w[i], rad_diagnosis[i], classifier_prob[i], alpha, beta) == 1,
                   outcome[i] == 1);
  }
  return c;
}

metrics::ConfusionCounts radiologist_confusion(std::span<const TriageSample> samples) {
  metrics::ConfusionCounts c;
  for (const auto& s : samples) metrics::tally(c, s.rad_diagnosis == 1, s.outcome == 1);
  return c;
}

metrics::ConfusionCounts classifier_confusion(std::span<const TriageSample> samples, double beta) {
  metrics::ConfusionCounts c;
  for (const auto& s : samples) metrics::tally(c, s.classifier_prob >= beta, s.outcome == 1);
  return c;
}

void CandidateSchedule::validate() const {
  if (stages.empty()) fail(ErrorKind::kConfig, "triage schedule has no stages");
  int total = 0;
  for (const auto& s : stages) {
    if (!(s.lr > 0.0)) fail(ErrorKind::kConfig, "triage learning rate must be positive");
    if (s.epochs < 0) fail(ErrorKind::kConfig, "triage epochs must be >= 0");
    total += s.epochs;
  }
  if (total <= 0) fail(ErrorKind::kConfig, "triage epochs must be positive");
  if (batch_size == 0) fail(ErrorKind::kConfig, "triage batch size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::kConfig, "momentum must be in [0, 1)");
  if (!(label_threshold >= 0.0 && label_threshold <= 1.0)) {
    fail(ErrorKind::kConfig, "label threshold must be in [0, 1]");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorKind::kConfig, "triage dropout must be in [0, 1)");
}

double triage_loss(const nn::Mlp& net, std::span<const double> inputs,
                   std::span<const int> l_R, std::span<const int> l_C, double b_R,
                   double b_C, nn::Gradients* grads, Rng* dropout_rng) {
  const std::size_t batch = l_R.size();
  if (batch == 0 || l_C.size() != batch) fail("triage batch labels mismatch");
  const auto cache = net.forward_train(inputs, batch, dropout_rng);
  const double inv = 1.0 / static_cast<double>(batch);
  std::vector<double> dlogits(batch);
  double total = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    const double w = cache.outputs[s];
    total += loss::triage_sample_loss(w, l_R[s], l_C[s], b_R, b_C);
    dlogits[s] = loss::triage_sample_grad(l_R[s], l_C[s], b_R, b_C) * w * (1.0 - w) * inv;
  }
  if (grads != nullptr) {
    grads->zero();
    net.backward(cache, inputs, dlogits, *grads);
  }
  return total * inv;
}

TriageNet train_candidate(std::span<const TriageSample> train, double b_R, double b_C,
                          const CandidateSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  if (train.empty()) fail("empty triage training set");
  if (!(b_R >= 0.0) || !(b_C >= 0.0)) fail("triage loss weights must be >= 0");
  const std::size_t n = train.size();
  const std::size_t in = kTriageInput;
  std::vector<int> l_R(n), l_C(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = train[i];
    if (s.features.size() != in) fail("dimension mismatch");
    l_R[i] = s.rad_diagnosis != s.outcome ? 1 : 0;
    l_C[i] = (s.classifier_prob >= schedule.label_threshold ? 1 : 0) != s.outcome ? 1 : 0;
  }

  TriageNet net = TriageNet::init(triage_arch(kTriageInput, {64, 32}, schedule.dropout),
                                  derive_seed(seed, 0x1A));
  Rng dropout_rng(derive_seed(seed, 0xD0));
  nn::Sgd opt(net.mlp(), schedule.momentum);
  nn::Gradients grads(net.mlp());
  std::vector<std::size_t> order(n);
  std::vector<double> x;
  std::vector<int> br, bc;
  std::vector<double> epoch_lr;
  for (const auto& stage : schedule.stages) epoch_lr.insert(epoch_lr.end(), stage.epochs, stage.lr);
  for (std::size_t epoch = 0; epoch < epoch_lr.size(); ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5F, epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t b = 0; b < n; b += schedule.batch_size) {
      const std::size_t m = std::min(schedule.batch_size, n - b);
      x.resize(m * in);
      br.resize(m);
      bc.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = order[b + k];
        std::copy(train[i].features.begin(), train[i].features.end(), x.begin() + k * in);
        br[k] = l_R[i];
        bc[k] = l_C[i];
      }
      const double l = triage_loss(net.mlp(), x, br, bc, b_R, b_C, &grads, &dropout_rng);
      if (!std::isfinite(l)) fail(ErrorKind::kNumerical, "triage training diverged");
      opt.step(net.mlp(), grads, epoch_lr[epoch]);
    }
  }
  if (!net.mlp().all_finite()) fail(ErrorKind::kNumerical, "triage training diverged");
  return net;
}

void GridSpec::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) fail(ErrorKind::kConfig, "grid step must be positive");
  if (!(b_max >= 0.0) || !std::isfinite(b_max)) fail(ErrorKind::kConfig, "grid maximum must be >= 0");
  if (b_max / delta > 1e4) fail(ErrorKind::kConfig, "grid too fine");
}

std::vector<double> GridSpec::values() const {
  validate();
  std::vector<double> v;
  for (std::size_t k = 0;; ++k) {
    const double b = static_cast<double>(k) * delta;
    if (b > b_max * (1.0 + 1e-12) + 1e-12) break;
    v.push_back(b);
  }
  return v;
}

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t i_R, std::size_t i_C) noexcept {
  return derive_seed(seed, i_R, i_C);
}

std::vector<double> threshold_candidates(std::span<const double> scores) {
  std::vector<double> v(scores.begin(), scores.end());
  v.push_back(0.0);
  v.push_back(1.0);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

ThresholdChoice best_thresholds(std::span<const double> w, std::span<const int> rad_diagnosis,
                                std::span<const double> classifier_prob,
                                std::span<const int> outcome, std::int64_t fn_limit,
                                std::int64_t fp_limit) {
  const std::size_t n = outcome.size();
  if (w.size() != n || rad_diagnosis.size() != n || classifier_prob.size() != n) {
    fail("missing predictions");
  }
  const auto alphas = threshold_candidates(w);
  const auto betas = threshold_candidates(classifier_prob);
  const std::size_t nb = betas.size();

  // Patients not yet routed to the radiologist, bucketed by the rank of their
  // probability among the beta candidates: positive at beta_j iff rank >= j.
  std::vector<std::int64_t> pos_at(nb, 0), neg_at(nb, 0);
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(
        std::lower_bound(betas.begin(), betas.end(), classifier_prob[i]) - betas.begin());
    (outcome[i] == 1 ? pos_at : neg_at)[rank[i]] += 1;
  }
  std::int64_t pos_total = 0, neg_total = 0;
  for (std::size_t j = 0; j < nb; ++j) {
    pos_total += pos_at[j];
    neg_total += neg_at[j];
  }

  std::vector<std::size_t> by_w(n);
  std::iota(by_w.begin(), by_w.end(), std::size_t{0});
  std::stable_sort(by_w.begin(), by_w.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });

  metrics::ConfusionCounts rad;  // radiologist part
  std::size_t next = 0;
  for (std::size_t a = alphas.size(); a-- > 0;) {
    const double alpha = alphas[a];
    while (next < n && w[by_w[next]] >= alpha) {
      const std::size_t i = by_w[next++];
      metrics::tally(rad, rad_diagnosis[i] == 1, outcome[i] == 1);
      (outcome[i] == 1 ? pos_at : neg_at)[rank[i]] -= 1;
      (outcome[i] == 1 ? pos_total : neg_total) -= 1;
    }
    if (next == n) break;  // everyone to the radiologist is the trivial policy
    ThresholdChoice best;
    std::int64_t pos_below = 0, neg_below = 0;
    for (std::size_t j = 0; j < nb; ++j) {
      // Classifier negatives are ranks < j.
      metrics::ConfusionCounts c = rad;
      c.fn += pos_below;
      c.tn += neg_below;
      c.tp += pos_total - pos_below;
      c.fp += neg_total - neg_below;
      pos_below += pos_at[j];
      neg_below += neg_at[j];
      if (c.fn > fn_limit || c.fp > fp_limit) continue;
      if (!best.feasible || c.fn < best.counts.fn ||
          (c.fn == best.counts.fn && c.fp < best.counts.fp)) {
        best.feasible = true;
        best.alpha = alpha;
        best.beta = betas[j];
        best.reads = static_cast<std::int64_t>(next);
        best.counts = c;
      }
    }
    if (best.feasible) return best;
  }
  ThresholdChoice trivial;
  trivial.alpha = 0.0;
  trivial.beta = 0.5;
  trivial.reads = static_cast<std::int64_t>(n);
  trivial.counts = system_confusion(w, rad_diagnosis, classifier_prob, outcome, 0.0, 0.5);
  return trivial;
}

int TriagePolicy::decide(const TriageSample& s) const {
  return system_decision(weight(s), s.rad_diagnosis, s.classifier_prob, alpha, beta);
}

namespace {

struct Columns {
  std::vector<double> w, prob;
  std::vector<int> rad, outcome;
};

Columns columns(const TriageNet& net, std::span<const TriageSample> samples) {
  Columns c;
  std::vector<double> x;
  x.reserve(samples.size() * kTriageInput);
  for (const auto& s : samples) {
    if (s.features.size() != kTriageInput) fail("dimension mismatch");
    x.insert(x.end(), s.features.begin(), s.features.end());
    c.prob.push_back(s.classifier_prob);
    c.rad.push_back(s.rad_diagnosis);
    c.outcome.push_back(s.outcome);
  }
  c.w = net.forward_batch(x, samples.size());
  return c;
}

template <typename F>
double defined_or_nan(F&& f) {
  try {
    return f();
  } catch (const Error&) {
    return std::nan("");
  }
}

bool better(const ThresholdChoice& a, const ThresholdChoice& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.reads != b.reads) return a.reads < b.reads;
  if (a.counts.fn != b.counts.fn) return a.counts.fn < b.counts.fn;
  return a.counts.fp < b.counts.fp;
}

}  // namespace

metrics::ConfusionCounts system_confusion(const TriagePolicy& policy,
                                          std::span<const TriageSample> samples) {
  const auto c = columns(policy.net, samples);
  return system_confusion(c.w, c.rad, c.prob, c.outcome, policy.alpha, policy.beta);
}

TriageResult train_triage(std::span<const TriageSample> train,
                          std::span<const TriageSample> validation,
                          std::span<const std::int64_t> held_out_ids, const GridSpec& grid,
                          const CandidateSchedule& schedule, std::uint64_t seed,
                          std::size_t threads) {
  schedule.validate();
  if (validation.empty()) fail("empty triage validation set");
  std::vector<std::int64_t> train_ids, val_ids;
  for (const auto& s : train) train_ids.push_back(s.id);
  for (const auto& s : validation) val_ids.push_back(s.id);
  fusion::check_disjoint(train_ids, val_ids, "both the triage training and validation sets");
  fusion::check_disjoint(held_out_ids, train_ids, "both the held-out and triage training sets");
  fusion::check_disjoint(held_out_ids, val_ids, "both the held-out and triage validation sets");

  const auto bs = grid.values();
  const std::size_t cells = bs.size() * bs.size();
  TriageResult result;
  result.radiologist_val = radiologist_confusion(validation);
  result.grid.resize(cells);
  result.candidates.resize(cells);

  parallel_for(cells, threads, [&](std::size_t k) {
    const std::size_t iR = k / bs.size(), iC = k % bs.size();
    auto net = train_candidate(train, bs[iR], bs[iC], schedule, candidate_seed(seed, iR, iC));
    const auto c = columns(net, validation);
    GridEntry& e = result.grid[k];
    e.b_R = bs[iR];
    e.b_C = bs[iC];
    e.choice = best_thresholds(c.w, c.rad, c.prob, c.outcome, result.radiologist_val.fn,
                               result.radiologist_val.fp);
    result.candidates[k] = std::move(net);
  });

  // Ties keep the earliest cell, so the winner does not depend on which
  // worker finished first.
  std::size_t win = 0;
  for (std::size_t k = 1; k < cells; ++k) {
    if (better(result.grid[k].choice, result.grid[win].choice)) win = k;
  }
  const auto& e = result.grid[win];
  TriagePolicy& p = result.policy;
  p.net = result.candidates[win];
  p.b_R = e.b_R;
  p.b_C = e.b_C;
  p.constraint_bound = !e.choice.feasible;
  p.alpha = p.constraint_bound ? 0.0 : e.choice.alpha;
  p.beta = p.constraint_bound ? 0.5 : e.choice.beta;
  result.policy_val = system_confusion(p, validation);
  return result;
}

std::vector<OperatingPoint> operating_curve(std::span<const double> w,
                                            std::span<const int> rad_diagnosis,
                                            std::span<const double> classifier_prob,
                                            std::span<const int> outcome, double beta) {
  const std::size_t n = outcome.size();
  if (n == 0) fail("empty cohort");
  const auto alphas = threshold_candidates(w);
  std::vector<OperatingPoint> points;
  points.reserve(alphas.size());
  for (std::size_t a = alphas.size(); a-- > 0;) {
    OperatingPoint p;
    p.alpha = alphas[a];
    p.counts = system_confusion(w, rad_diagnosis, classifier_prob, outcome, p.alpha, beta);
    std::size_t reads = 0;
    for (double v : w) reads += to_radiologist(v, p.alpha) ? 1 : 0;
    p.frac_to_radiologist = static_cast<double>(reads) / static_cast<double>(n);
    // Each rate needs only its own class present.
    const auto& k = p.counts;
    p.fnr = k.positives() > 0 ? static_cast<double>(k.fn) / static_cast<double>(k.positives())
                              : std::nan("");
    p.fpr = k.negatives() > 0 ? static_cast<double>(k.fp) / static_cast<double>(k.negatives())
                              : std::nan("");
    p.kappa = defined_or_nan([&] { return metrics::cohen_kappa(p.counts); });
    p.f1 = defined_or_nan([&] { return metrics::f1(p.counts); });
    points.push_back(p);
  }
  return points;
}

std::vector<OperatingPoint> operating_curve(const TriagePolicy& policy,
                                            std::span<const TriageSample> samples) {
  const auto c = columns(policy.net, samples);
  return operating_curve(c.w, c.rad, c.prob, c.outcome, policy.beta);
}

void save_operating_curve(const std::filesystem::path& path,
                          std::span<const OperatingPoint> points) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  os << "frac_to_radiologist,fnr,fpr,kappa,f1,tp,tn,fp,fn\n";
  for (const auto& p : points) {
    os << csv::format(p.frac_to_radiologist) << ',' << csv::format(p.fnr) << ','
       << csv::format(p.fpr) << ',' << csv::format(p.kappa) << ',' << csv::format(p.f1) << ','
       << p.counts.tp << ',' << p.counts.tn << ',' << p.counts.fp << ',' << p.counts.fn << '\n';
  }
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

nlohmann::json to_json(const TriagePolicy& policy, const nlohmann::json& extra) {
  nlohmann::json e = extra;
  e["alpha"] = policy.alpha;
  e["beta"] = policy.beta;
  e["b_R"] = policy.b_R;
  e["b_C"] = policy.b_C;
  e["constraint_bound"] = policy.constraint_bound;
  return nn::model_envelope("triage", policy.net.mlp(), e);
}

TriagePolicy policy_from_json(const nlohmann::json& j) {
  TriagePolicy p;
  p.net = TriageNet(nn::open_envelope(j, "triage"));
  try {
    p.alpha = j.at("alpha").get<double>();
    p.beta = j.at("beta").get<double>();
    p.b_R = j.at("b_R").get<double>();
    p.b_C = j.at("b_C").get<double>();
    p.constraint_bound = j.at("constraint_bound").get<bool>();
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::kParse, std::string("triage policy: ") + ex.what());
  }
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0 && p.beta >= 0.0 && p.beta <= 1.0)) {
    fail(ErrorKind::kParse, "triage policy thresholds must be in [0, 1]");
  }
  return p;
}

}  // namespace mammo::triage

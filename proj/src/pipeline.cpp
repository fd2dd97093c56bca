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

#include "mammo/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <cmath>

#include "json.hpp"
#include "mammo/csv.hpp"
#include "mammo/error.hpp"
#include "mammo/fusion.hpp"
#include "mammo/metrics.hpp"
#include "mammo/mtlnet.hpp"
#include "mammo/report.hpp"
#include "mammo/svg.hpp"
#include "mammo/triage.hpp"

namespace mammo::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream tags for derive_seed(config.seed, tag).
enum SeedTag : std::uint64_t {
  kCohortSeed = 0xC0,
  kSplitSeed = 0x5B,
  kMtlInitSeed = 0x31,
  kMtlTrainSeed = 0x32,
  kClassifierInitSeed = 0x41,
  kClassifierTrainSeed = 0x42,
  kFeatureSeed = 0x43,
  kTriageSeed = 0x51,
  kRandomAllocationSeed = 0x61,
};

std::uint64_t seed_for(const Context& ctx, SeedTag tag) {
  return derive_seed(ctx.config.seed, static_cast<std::uint64_t>(tag));
}

void say(const Context& ctx, const std::string& msg) {
  if (ctx.log != nullptr) *ctx.log << "[mammo] " << msg << '\n' << std::flush;
}

fs::path at(const Context& ctx, const char* name) { return ctx.out / name; }

fs::path require(const Context& ctx, const char* name) {
  const auto p = at(ctx, name);
  if (!fs::exists(p)) {
    fail(ErrorKind::kMissingArtifact, std::string("missing artifact ") + name + " in " +
                                          ctx.out.string());
  }
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  os << text;
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kMissingArtifact, "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

cohort::SplitSpec split_spec(const Context& ctx) {
  auto s = ctx.config.cohort.split;
  s.seed = seed_for(ctx, kSplitSeed);
  return s;
}

struct Loaded {
  cohort::Cohort cohort;
  cohort::Partition parts;
};

Loaded load_data(const Context& ctx, bool with_images) {
  Loaded d;
  d.cohort = cohort::load_cohort(require(ctx, artifact::kCohort), with_images);
  d.parts = cohort::load_partition(require(ctx, artifact::kPartition), d.cohort);
  return d;
}

std::vector<std::int64_t> ids_of(const cohort::Cohort& c, const std::vector<std::size_t>& idx) {
  std::vector<std::int64_t> ids;
  ids.reserve(idx.size());
  for (auto i : idx) ids.push_back(c[i].id);
  return ids;
}

mtl::ViewDataset view_dataset(const cohort::Cohort& c, const std::vector<std::size_t>& idx) {
  mtl::ViewDataset d;
  for (auto i : idx) {
    for (auto v : kAllViews) d.add(&c[i].views[static_cast<std::size_t>(v)], c[i].view_labels(v));
  }
  return d;
}

void write_history(const fs::path& path, const std::vector<mtl::EpochRecord>& h) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,val_auroc\n";
  for (const auto& r : h) {
    os << r.epoch << ',' << csv::format(r.lr) << ',' << csv::format(r.train_loss) << ','
       << csv::format(r.val_auroc) << '\n';
  }
  write_text(path, os.str());
}

fusion::FeatureOptions feature_options(const Context& ctx) {
  fusion::FeatureOptions f;
  f.tta = ctx.config.classifier.tta;
  f.augment = ctx.config.augment;
  f.seed = seed_for(ctx, kFeatureSeed);
  f.threads = ctx.threads;
  return f;
}

mtl::MtlNet load_mtl(const Context& ctx, std::vector<std::int64_t>* train_ids = nullptr) {
  const auto j = read_json(require(ctx, artifact::kMtlModel));
  auto net = mtl::mtlnet_from_json(j);
  if (train_ids != nullptr) {
    if (!j.contains("train_ids")) fail(ErrorKind::kParse, "per-view model lacks its training ids");
    *train_ids = j["train_ids"].get<std::vector<std::int64_t>>();
  }
  return net;
}

fusion::ClassifierNet load_classifier(const Context& ctx) {
  return fusion::classifier_from_json(read_json(require(ctx, artifact::kClassifierModel)));
}

triage::TriagePolicy load_policy(const Context& ctx) {
  return triage::policy_from_json(read_json(require(ctx, artifact::kTriageModel)));
}

json counts_json(const metrics::ConfusionCounts& c) {
  return {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
}

json metrics_json(const metrics::ConfusionCounts& c) {
  const auto row = report::comparison_row("", c, 0.0);
  json j = counts_json(c);
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  j["kappa"] = num(row.kappa);
  j["f1"] = num(row.f1);
  j["fnr"] = num(row.fnr);
  j["fpr"] = num(row.fpr);
  return j;
}

struct Evaluated {
  std::vector<triage::TriageSample> samples;
  std::vector<double> w;
  std::vector<int> decision;
  std::size_t reads = 0;
  metrics::ConfusionCounts radiologist, classifier, system;
};

// The stand-alone classifier row uses the classifier's own cut; inside the
// system the policy's beta applies.
Evaluated evaluate_rows(const std::vector<fusion::FeatureRow>& rows,
                        const fusion::ClassifierNet& clf, const triage::TriagePolicy& policy,
                        double classifier_cut) {
  Evaluated e;
  e.samples = triage::make_samples(rows, clf);
  for (const auto& s : e.samples) {
    const double w = policy.weight(s);
    const bool rad = triage::to_radiologist(w, policy.alpha);
    const int d = triage::system_decision(w, s.rad_diagnosis, s.classifier_prob, policy.alpha,
                                          policy.beta);
    e.w.push_back(w);
    e.decision.push_back(d);
    e.reads += rad ? 1 : 0;
    metrics::tally(e.radiologist, s.rad_diagnosis == 1, s.outcome == 1);
    metrics::tally(e.classifier, s.classifier_prob >= classifier_cut, s.outcome == 1);
    metrics::tally(e.system, d == 1, s.outcome == 1);
  }
  return e;
}

double frac(std::size_t k, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
}

}  // namespace

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".mammo.lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) {
    fail(ErrorKind::kIo, "output directory " + dir.string() + " is in use (remove " +
                             path_.string() + " if no other run is active)");
  }
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void write_resolved_config(const Context& ctx) {
  fs::create_directories(ctx.out);
  write_text(at(ctx, artifact::kResolvedConfig), ctx.config.resolved());
}

void generate(const Context& ctx) {
  ctx.config.validate();
  write_resolved_config(ctx);
  const auto& c = ctx.config.cohort;
  say(ctx, "generating " + std::to_string(c.n) + " patients");
  const auto data = cohort::generate_cohort(c.n, c.strata, c.reader_profile(),
                                            seed_for(ctx, kCohortSeed), ctx.threads);
  cohort::save_cohort(at(ctx, artifact::kCohort), data);
  const auto parts = cohort::partition(c.n, split_spec(ctx));
  cohort::save_partition(at(ctx, artifact::kPartition), data, parts);
}

void train_mtl(const Context& ctx) {
  ctx.config.validate();
  const auto d = load_data(ctx, true);
  const auto& m = ctx.config.mtl;
  const auto train_set = view_dataset(d.cohort, d.parts.stage1);
  const auto val_set = view_dataset(d.cohort, d.parts.validation);
  auto schedule = m.schedule;
  schedule.seed = seed_for(ctx, kMtlTrainSeed);
  schedule.augment = ctx.config.augment;
  schedule.threads = ctx.threads;
  const auto init = mtl::MtlNet::init(
      mtl::make_arch(mtl::kImageWidth * mtl::kImageHeight, m.hidden, m.dropout),
      seed_for(ctx, kMtlInitSeed));
  say(ctx, "training per-view model on " + std::to_string(train_set.size()) + " views");
  const auto r = mtl::train(init, train_set, val_set, schedule, m.loss);
  for (const auto& h : r.history) {
    say(ctx, "  epoch " + std::to_string(h.epoch) + " loss " + csv::format(h.train_loss, 5) +
                 " val AUROC " + csv::format(h.val_auroc, 4));
  }
  json extra;
  extra["train_ids"] = ids_of(d.cohort, d.parts.stage1);
  extra["best_epoch"] = r.best_epoch;
  extra["best_val_auroc"] = r.best_val_auroc;
  write_json(at(ctx, artifact::kMtlModel), mtl::to_json(r.best, extra));
  write_history(at(ctx, artifact::kMtlHistory), r.history);
}

void train_classifier(const Context& ctx) {
  ctx.config.validate();
  std::vector<std::int64_t> per_view_ids;
  const auto per_view = load_mtl(ctx, &per_view_ids);
  const auto d = load_data(ctx, true);
  const auto stage2_ids = ids_of(d.cohort, d.parts.stage2);
  fusion::check_disjoint(per_view_ids, stage2_ids,
                         "both the per-view and the classifier training sets");
  const auto fo = feature_options(ctx);
  say(ctx, "extracting multi-task outputs (" + std::to_string(fo.tta) + " augmentations per view)");
  const auto stage2 = fusion::build_features(d.cohort, d.parts.stage2, per_view, fo);
  const auto stage3 = fusion::build_features(d.cohort, d.parts.stage3, per_view, fo);
  const auto val = fusion::build_features(d.cohort, d.parts.validation, per_view, fo);
  fusion::save_features(at(ctx, artifact::kFeaturesStage2), stage2);
  fusion::save_features(at(ctx, artifact::kFeaturesStage3), stage3);
  fusion::save_features(at(ctx, artifact::kFeaturesValidation), val);

  const auto& k = ctx.config.classifier;
  auto schedule = k.schedule;
  schedule.seed = seed_for(ctx, kClassifierTrainSeed);
  const auto init = fusion::ClassifierNet::init(
      fusion::classifier_arch(fusion::kFusionSize, k.hidden, k.dropout),
      seed_for(ctx, kClassifierInitSeed));
  say(ctx, "training classifier on " + std::to_string(stage2.size()) + " patients");
  const auto r = fusion::train_classifier(init, stage2, val, schedule);
  say(ctx, "  best validation AUROC " + csv::format(r.best_val_auroc, 4) + " at epoch " +
               std::to_string(r.best_epoch));
  json extra;
  extra["train_ids"] = stage2_ids;
  extra["best_epoch"] = r.best_epoch;
  extra["best_val_auroc"] = r.best_val_auroc;
  write_json(at(ctx, artifact::kClassifierModel), fusion::to_json(r.best, extra));
  write_history(at(ctx, artifact::kClassifierHistory), r.history);
}

bool train_triage(const Context& ctx) {
  ctx.config.validate();
  const auto clf = load_classifier(ctx);
  const auto train_rows = fusion::load_features(require(ctx, artifact::kFeaturesStage3));
  const auto val_rows = fusion::load_features(require(ctx, artifact::kFeaturesValidation));
  // Only the held-out ids are read, to prove disjointness.
  const auto d = load_data(ctx, false);
  const auto held_out = ids_of(d.cohort, d.parts.test);
  const auto train = triage::make_samples(train_rows, clf);
  const auto val = triage::make_samples(val_rows, clf);
  const auto& t = ctx.config.triage;
  say(ctx, "training " + std::to_string(t.grid.values().size() * t.grid.values().size()) +
               " triage candidates");
  const auto r = triage::train_triage(train, val, held_out, t.grid, t.schedule,
                                      seed_for(ctx, kTriageSeed), ctx.threads);
  const auto& p = r.policy;
  const std::size_t reads = static_cast<std::size_t>(std::count_if(
      val.begin(), val.end(), [&](const auto& s) { return triage::to_radiologist(p.weight(s), p.alpha); }));

  json val_metrics;
  val_metrics["n"] = val.size();
  val_metrics["frac_to_radiologist"] = frac(reads, val.size());
  val_metrics["radiologist"] = metrics_json(r.radiologist_val);
  val_metrics["system"] = metrics_json(r.policy_val);
  json extra;
  extra["val_metrics"] = val_metrics;
  write_json(at(ctx, artifact::kTriageModel), triage::to_json(p, extra));

  json policy{{"model", artifact::kTriageModel},
              {"alpha", p.alpha},
              {"beta", p.beta},
              {"b_R", p.b_R},
              {"b_C", p.b_C},
              {"constraint_bound", p.constraint_bound},
              {"val_metrics", val_metrics}};
  write_json(at(ctx, artifact::kPolicy), policy);

  std::ostringstream os;
  os << "b_R,b_C,feasible,alpha,beta,reads,tp,tn,fp,fn\n";
  for (const auto& e : r.grid) {
    const auto& c = e.choice;
    os << csv::format(e.b_R) << ',' << csv::format(e.b_C) << ',' << (c.feasible ? 1 : 0) << ','
       << csv::format(c.alpha) << ',' << csv::format(c.beta) << ',' << c.reads << ','
       << c.counts.tp << ',' << c.counts.tn << ',' << c.counts.fp << ',' << c.counts.fn << '\n';
  }
  write_text(at(ctx, artifact::kTriageGrid), os.str());
  if (p.constraint_bound) {
    say(ctx, "warning: no triage policy meets the radiologist's FNR and FPR on validation; "
             "every patient goes to the radiologist (constraint-bound)");
  } else {
    say(ctx, "policy: alpha " + csv::format(p.alpha, 6) + " beta " + csv::format(p.beta, 6) +
                 " b_R " + csv::format(p.b_R) + " b_C " + csv::format(p.b_C) +
                 ", validation reads " + std::to_string(reads) + "/" + std::to_string(val.size()));
  }
  return p.constraint_bound;
}

void evaluate(const Context& ctx, const EvaluateOptions& opts) {
  ctx.config.validate();
  auto policy = load_policy(ctx);
  if (opts.alpha) policy.alpha = *opts.alpha;
  if (opts.beta) policy.beta = *opts.beta;
  if (!(policy.alpha >= 0.0 && policy.alpha <= 1.0 && policy.beta >= 0.0 && policy.beta <= 1.0)) {
    fail(ErrorKind::kConfig, "alpha and beta must be in [0, 1]");
  }
  const auto clf = load_classifier(ctx);
  const auto per_view = load_mtl(ctx);
  const auto d = load_data(ctx, true);
  say(ctx, "extracting test-set features");
  const auto test_rows = fusion::build_features(d.cohort, d.parts.test, per_view, feature_options(ctx));
  fusion::save_features(at(ctx, artifact::kFeaturesTest), test_rows);
  const auto val_rows = fusion::load_features(require(ctx, artifact::kFeaturesValidation));

  std::ostringstream os;
  os << "split,method,frac_to_radiologist,kappa,f1,fnr,fpr,tp,tn,fp,fn\n";
  auto emit = [&](const char* split, const std::vector<fusion::FeatureRow>& rows) {
    const auto e = evaluate_rows(rows, clf, policy, ctx.config.triage.schedule.label_threshold);
    const std::size_t n = rows.size();
    const std::vector<report::ComparisonRow> cmp{
        report::comparison_row("radiologist", e.radiologist, 1.0),
        report::comparison_row("classifier", e.classifier, 0.0),
        report::comparison_row("mammo", e.system, frac(e.reads, n))};
    for (const auto& r : cmp) {
      os << split << ',' << r.name << ',' << report::format_metric(r.frac_to_radiologist) << ','
         << report::format_metric(r.kappa) << ',' << report::format_metric(r.f1) << ','
         << report::format_metric(r.fnr) << ',' << report::format_metric(r.fpr) << ','
         << r.counts->tp << ',' << r.counts->tn << ',' << r.counts->fp << ',' << r.counts->fn
         << '\n';
    }
    return e;
  };
  emit("validation", val_rows);
  const auto e = emit("test", test_rows);
  write_text(at(ctx, artifact::kEvaluation), os.str());
  say(ctx, "test: " + std::to_string(e.reads) + "/" + std::to_string(test_rows.size()) +
               " to the radiologist; kappa radiologist " +
               report::format_metric(report::kappa_or_nan(e.radiologist)) + " system " +
               report::format_metric(report::kappa_or_nan(e.system)));
}

void sweep(const Context& ctx) {
  const auto policy = load_policy(ctx);
  const auto clf = load_classifier(ctx);
  const auto val_rows = fusion::load_features(require(ctx, artifact::kFeaturesValidation));
  const auto samples = triage::make_samples(val_rows, clf);
  const auto points = triage::operating_curve(policy, samples);
  triage::save_operating_curve(at(ctx, artifact::kCurveValidation), points);
}

void report(const Context& ctx) {
  ctx.config.validate();
  const auto policy = load_policy(ctx);
  const auto clf = load_classifier(ctx);
  const auto test_rows = fusion::load_features(require(ctx, artifact::kFeaturesTest));
  const auto d = load_data(ctx, false);
  const double cut = ctx.config.triage.schedule.label_threshold;
  const auto e = evaluate_rows(test_rows, clf, policy, cut);
  const std::size_t n = test_rows.size();
  if (n == 0) fail("empty test set");

  std::unordered_map<std::int64_t, const cohort::PatientRecord*> by_id;
  for (const auto& p : d.cohort) by_id[p.id] = &p;
  std::vector<report::PatientResult> results;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = by_id.find(test_rows[i].id);
    if (it == by_id.end()) fail(ErrorKind::kParse, "test patient " + std::to_string(test_rows[i].id) + " not in cohort");
    const auto& p = *it->second;
    report::PatientResult r;
    r.id = p.id;
    r.age = p.age;
    r.family_history = p.family_history;
    r.recall = p.recall;
    r.sign = p.sign;
    r.suspicion = p.suspicion;
    r.conspicuity = p.conspicuity;
    r.mean_density = p.mean_density();
    r.outcome = p.outcome;
    r.rad_diagnosis = p.rad_diagnosis;
    r.classifier_prob = e.samples[i].classifier_prob;
    r.to_radiologist = triage::to_radiologist(e.w[i], policy.alpha);
    r.system_decision = e.decision[i];
    results.push_back(r);
  }

  const auto strata = report::standard_strata(ctx.config.report);
  std::vector<std::string> omitted;
  report::write_agreement(at(ctx, artifact::kAgreement),
                          report::agreement_table(results, strata, cut, &omitted));
  omitted.clear();
  report::write_workload(at(ctx, artifact::kWorkload),
                         report::workload_table(results, strata, &omitted));

  const std::vector<report::ComparisonRow> cmp{
      report::comparison_row("Radiologist", e.radiologist, 1.0),
      report::comparison_row("Classifier", e.classifier, 0.0),
      report::random_allocation(results, e.reads, policy.beta,
                                ctx.config.report.random_allocations,
                                seed_for(ctx, kRandomAllocationSeed)),
      report::comparison_row("MAMMO", e.system, frac(e.reads, n))};
  report::write_comparison(at(ctx, artifact::kComparison), cmp);

  std::vector<report::VarianceRow> var(3);
  var[0].population = "All patients";
  var[1].population = "Classifier positive";
  var[2].population = "Classifier negative";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& views = test_rows[i].input.views;
    const double dv = fusion::density_variance(views);
    double mean_age = 0.0, age_var = 0.0;
    for (const auto& m : views) mean_age += denormalize_age(m.age);
    mean_age /= static_cast<double>(views.size());
    for (const auto& m : views) age_var += (denormalize_age(m.age) - mean_age) * (denormalize_age(m.age) - mean_age);
    age_var /= static_cast<double>(views.size());
    for (std::size_t g : {std::size_t{0}, results[i].classifier_prob >= cut ? std::size_t{1} : std::size_t{2}}) {
      var[g].n += 1;
      var[g].mean_density_variance += dv;
      var[g].mean_age_variance += age_var;
    }
  }
  for (auto& v : var) {
    const double inv = v.n ? 1.0 / static_cast<double>(v.n) : std::nan("");
    v.mean_density_variance *= inv;
    v.mean_age_variance *= inv;
  }
  report::write_variance(at(ctx, artifact::kDensityVariance), var);

  const auto points = triage::operating_curve(e.w, [&] {
    std::vector<int> v;
    for (const auto& s : e.samples) v.push_back(s.rad_diagnosis);
    return v;
  }(), [&] {
    std::vector<double> v;
    for (const auto& s : e.samples) v.push_back(s.classifier_prob);
    return v;
  }(), [&] {
    std::vector<int> v;
    for (const auto& s : e.samples) v.push_back(s.outcome);
    return v;
  }(), policy.beta);
  triage::save_operating_curve(at(ctx, artifact::kCurve), points);
  svg::CurveReference ref;
  ref.fnr = cmp[0].fnr;
  ref.fpr = cmp[0].fpr;
  ref.chosen_frac = frac(e.reads, n);
  write_text(at(ctx, artifact::kCurvePlot), svg::operating_curve(points, ref));

  // Saliency of the first malignant test patient with a visible finding, on
  // the view that carries it.
  const cohort::PatientRecord* pick = nullptr;
  for (const auto& r : results) {
    const auto* p = by_id.at(r.id);
    if (p->outcome == 1 && p->sign != Sign::kNone) {
      pick = p;
      break;
    }
  }
  if (pick == nullptr && !results.empty()) pick = by_id.at(results.front().id);
  if (pick != nullptr) {
    const auto per_view = load_mtl(ctx);
    const View v = pick->lesion_side() == 0 ? View::kMloR : View::kMloL;
    const auto img = image::read_pgm(require(ctx, artifact::kCohort).parent_path() /
                                     pick->image_paths[static_cast<std::size_t>(v)]);
    image::AugmentSpec pre = ctx.config.augment;
    const auto heat = fusion::saliency(per_view, img, pre);
    write_text(at(ctx, artifact::kSaliencyPlot),
               svg::saliency(img, heat, "patient " + std::to_string(pick->id) + ", " +
                                            std::string(view_name(v)) + " (outcome " +
                                            std::to_string(pick->outcome) + ")"));
  }

  json summary;
  summary["policy"] = {{"alpha", policy.alpha},
                       {"beta", policy.beta},
                       {"b_R", policy.b_R},
                       {"b_C", policy.b_C},
                       {"constraint_bound", policy.constraint_bound}};
  summary["test"] = {{"n", n},
                     {"frac_to_radiologist", frac(e.reads, n)},
                     {"radiologist", metrics_json(e.radiologist)},
                     {"classifier", metrics_json(e.classifier)},
                     {"mammo", metrics_json(e.system)}};
  std::vector<double> probs;
  std::vector<int> labels;
  for (const auto& s : e.samples) {
    probs.push_back(s.classifier_prob);
    labels.push_back(s.outcome);
  }
  summary["test"]["classifier_auroc"] = metrics::auroc(metrics::make_samples(probs, labels));
  json view_auroc = json::object();
  for (auto v : kAllViews) {
    std::vector<double> pv;
    for (const auto& r : test_rows) pv.push_back(r.input.views[static_cast<std::size_t>(v)].malignant());
    view_auroc[std::string(view_name(v))] = metrics::auroc(metrics::make_samples(pv, labels));
  }
  summary["test"]["view_auroc"] = view_auroc;
  summary["omitted_strata"] = omitted;
  write_json(at(ctx, artifact::kSummary), summary);
  say(ctx, "report written to " + ctx.out.string());
}

bool run_all(const Context& ctx) {
  generate(ctx);
  train_mtl(ctx);
  train_classifier(ctx);
  const bool bound = train_triage(ctx);
  evaluate(ctx);
  sweep(ctx);
  report(ctx);
  return bound;
}

}  // namespace mammo::pipeline

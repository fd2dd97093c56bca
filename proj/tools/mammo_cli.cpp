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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mammo/config.hpp"
#include "mammo/error.hpp"
#include "mammo/parallel.hpp"
#include "mammo/pipeline.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitInfeasible = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::size_t threads = 0;
  std::optional<double> delta;
  std::optional<double> b_max;
  std::vector<std::string> sets;
  bool strict = false;
  std::optional<double> alpha;
  std::optional<double> beta;
};

mammo::pipeline::Context make_context(const Options& o) {
  using mammo::ErrorKind;
  mammo::pipeline::Context ctx;
  ctx.config = o.config.empty() ? mammo::Config::standard() : mammo::load_config(o.config);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) mammo::fail(ErrorKind::kConfig, "--set expects key=value, got '" + kv + "'");
    ctx.config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) ctx.config.seed = *o.seed;
  if (o.delta) ctx.config.triage.grid.delta = *o.delta;
  if (o.b_max) ctx.config.triage.grid.b_max = *o.b_max;
  ctx.config.validate();
  ctx.out = o.out;
  ctx.threads = o.threads != 0 ? o.threads : mammo::default_thread_count();
  ctx.log = &std::cerr;
  return ctx;
}

int exit_code(mammo::ErrorKind kind) {
  switch (kind) {
    case mammo::ErrorKind::kConfig: return kExitConfig;
    case mammo::ErrorKind::kMissingArtifact: return kExitMissingArtifact;
    default: return kExitOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mammography triage pipeline on synthetic cohorts"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "Configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master seed (overrides the config)");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--threads", o.threads,
                 "Worker threads (default: MAMMO_THREADS or the core count)");
  app.add_option("--delta", o.delta, "Step of the b_R / b_C grid");
  app.add_option("--b-max", o.b_max, "Upper end of the b_R / b_C grid");
  app.add_option("--set", o.sets, "Override a config key, e.g. --set mtl.batch=32");
  app.add_flag("--strict", o.strict, "Exit with status 4 when triage is constraint-bound");

  auto* gen = app.add_subcommand("generate", "Generate the synthetic cohort and partition");
  auto* mtl = app.add_subcommand("train-mtl", "Train the per-view multi-task model");
  auto* clf = app.add_subcommand("train-classifier", "Extract features and train the classifier");
  auto* tri = app.add_subcommand("train-triage", "Train triage candidates and lock thresholds");
  auto* eva = app.add_subcommand("evaluate", "Evaluate the policy on the held-out test set");
  eva->add_option("--alpha", o.alpha, "Triage threshold override")->check(CLI::Range(0.0, 1.0));
  eva->add_option("--beta", o.beta, "Classifier threshold override")->check(CLI::Range(0.0, 1.0));
  auto* swp = app.add_subcommand("sweep", "Operating curve on the validation split");
  auto* rep = app.add_subcommand("report", "Stratified tables, plots and summary");
  auto* run = app.add_subcommand("run", "Every stage in order");
  for (auto* sub : {gen, mtl, clf, tri, eva, swp, rep, run}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const auto ctx = make_context(o);
    mammo::pipeline::OutputLock lock(ctx.out);
    mammo::pipeline::write_resolved_config(ctx);
    bool bound = false;
    if (gen->parsed()) mammo::pipeline::generate(ctx);
    if (mtl->parsed()) mammo::pipeline::train_mtl(ctx);
    if (clf->parsed()) mammo::pipeline::train_classifier(ctx);
    if (tri->parsed()) bound = mammo::pipeline::train_triage(ctx);
    if (eva->parsed()) mammo::pipeline::evaluate(ctx, {o.alpha, o.beta});
    if (swp->parsed()) mammo::pipeline::sweep(ctx);
    if (rep->parsed()) mammo::pipeline::report(ctx);
    if (run->parsed()) bound = mammo::pipeline::run_all(ctx);
    if (bound && o.strict) {
      std::cerr << "error [infeasible]: triage is constraint-bound\n";
      return kExitInfeasible;
    }
    return 0;
  } catch (const mammo::Error& e) {
    std::cerr << "error [" << mammo::error_kind_name(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return kExitOther;
  }
}

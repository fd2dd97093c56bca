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

#include "mammo/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "mammo/csv.hpp"
#include "mammo/error.hpp"
#include "mammo/random.hpp"

namespace mammo::report {

std::vector<Stratum> standard_strata(const ReportSettings& s) {
  std::vector<Stratum> out;
  out.push_back({"All patients", [](const PatientResult&) { return true; }});
  out.push_back({"High conspicuity",
                 [c = s.conspicuity_high](const PatientResult& p) { return p.conspicuity >= c; }});
  out.push_back({"Low conspicuity",
                 [c = s.conspicuity_high](const PatientResult& p) { return p.conspicuity < c; }});
  const std::array<std::pair<Sign, const char*>, kSignClasses> signs{{
      {Sign::kNone, "No sign of cancer"},
      {Sign::kCircumscribed, "Circumscribed mass"},
      {Sign::kSpiculated, "Spiculated mass"},
      {Sign::kMicroCalcification, "Micro-calcification"},
      {Sign::kDistortion, "Distortion"},
      {Sign::kAsymmetricDensity, "Asymmetrical density"},
  }};
  for (const auto& [sign, name] : signs) {
    out.push_back({name, [sign = sign](const PatientResult& p) { return p.sign == sign; }});
  }
  out.push_back({"High suspicion",
                 [c = s.suspicion_high](const PatientResult& p) { return p.suspicion >= c; }});
  out.push_back({"Low suspicion",
                 [c = s.suspicion_high](const PatientResult& p) { return p.suspicion < c; }});
  out.push_back({"High breast density",
                 [d = s.density_high](const PatientResult& p) { return p.mean_density >= d; }});
  out.push_back({"Low breast density",
                 [d = s.density_high](const PatientResult& p) { return p.mean_density < d; }});
  out.push_back({"Family history", [](const PatientResult& p) { return p.family_history; }});
  out.push_back({"No family history", [](const PatientResult& p) { return !p.family_history; }});
  out.push_back({"Age >= " + std::to_string(s.age_split),
                 [a = s.age_split](const PatientResult& p) { return p.age >= a; }});
  out.push_back({"Age < " + std::to_string(s.age_split),
                 [a = s.age_split](const PatientResult& p) { return p.age < a; }});
  out.push_back({"Recall by 1 reader",
                 [](const PatientResult& p) { return p.recall == RecallType::kOneReader; }});
  out.push_back({"Recall by 2 readers",
                 [](const PatientResult& p) { return p.recall == RecallType::kTwoReaders; }});
  out.push_back({"Recall by arbitration",
                 [](const PatientResult& p) { return p.recall == RecallType::kArbitration; }});
  return out;
}

std::vector<AgreementRow> agreement_table(std::span<const PatientResult> patients,
                                          std::span<const Stratum> strata, double threshold,
                                          std::vector<std::string>* omitted) {
  std::vector<AgreementRow> rows;
  for (const auto& s : strata) {
    std::array<std::size_t, 4> cells{};
    std::size_t n = 0;
    for (const auto& p : patients) {
      if (!s.member(p)) continue;
      ++n;
      const bool r_ok = p.rad_diagnosis == p.outcome;
      const bool c_ok = (p.classifier_prob >= threshold ? 1 : 0) == p.outcome;
      cells[(r_ok ? 0 : 2) + (c_ok ? 0 : 1)] += 1;
    }
    if (n == 0) {
      if (omitted != nullptr) omitted->push_back(s.name);
      continue;
    }
    AgreementRow row;
    row.population = s.name;
    row.n = n;
    for (std::size_t k = 0; k < 4; ++k) {
      row.fractions[k] = static_cast<double>(cells[k]) / static_cast<double>(n);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<WorkloadRow> workload_table(std::span<const PatientResult> patients,
                                        std::span<const Stratum> strata,
                                        std::vector<std::string>* omitted) {
  std::vector<WorkloadRow> rows;
  for (const auto& s : strata) {
    WorkloadRow row;
    row.population = s.name;
    std::size_t reads = 0;
    for (const auto& p : patients) {
      if (!s.member(p)) continue;
      ++row.n;
      reads += p.to_radiologist ? 1 : 0;
      metrics::tally(row.radiologist, p.rad_diagnosis == 1, p.outcome == 1);
      metrics::tally(row.system, p.system_decision == 1, p.outcome == 1);
    }
    if (row.n == 0) {
      if (omitted != nullptr) omitted->push_back(s.name);
      continue;
    }
    row.pct_to_radiologist = 100.0 * static_cast<double>(reads) / static_cast<double>(row.n);
    rows.push_back(row);
  }
  return rows;
}

namespace {

template <typename F>
double or_nan(F&& f) {
  try {
    return f();
  } catch (const Error&) {
    return std::nan("");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace

double kappa_or_nan(const metrics::ConfusionCounts& c) {
  return or_nan([&] { return metrics::cohen_kappa(c); });
}

double f1_or_nan(const metrics::ConfusionCounts& c) {
  return or_nan([&] { return metrics::f1(c); });
}

namespace {

// Each rate needs only its own class present.
double fnr_or_nan(const metrics::ConfusionCounts& c) {
  if (c.positives() <= 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(c.fn) / static_cast<double>(c.positives());
}

double fpr_or_nan(const metrics::ConfusionCounts& c) {
  if (c.negatives() <= 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(c.fp) / static_cast<double>(c.negatives());
}

}  // namespace

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

ComparisonRow comparison_row(std::string name, const metrics::ConfusionCounts& c,
                             double frac_to_radiologist) {
  ComparisonRow r;
  r.name = std::move(name);
  r.counts = c;
  r.frac_to_radiologist = frac_to_radiologist;
  r.kappa = kappa_or_nan(c);
  r.f1 = f1_or_nan(c);
  r.fnr = fnr_or_nan(c);
  r.fpr = fpr_or_nan(c);
  return r;
}

ComparisonRow random_allocation(std::span<const PatientResult> patients, std::size_t reads,
                                double beta, std::size_t allocations, std::uint64_t seed) {
  const std::size_t n = patients.size();
  if (n == 0) fail("empty cohort");
  if (reads > n) fail("more reads than patients");
  if (allocations == 0) fail("allocation count must be positive");
  ComparisonRow r;
  r.name = "Classifier-random";
  r.frac_to_radiologist = static_cast<double>(reads) / static_cast<double>(n);
  std::vector<std::size_t> order(n);
  double kappa = 0.0, f1 = 0.0, fnr = 0.0, fpr = 0.0;
  for (std::size_t a = 0; a < allocations; ++a) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, a));
    // Partial Fisher-Yates: the first `reads` slots are a uniform subset.
    for (std::size_t i = 0; i < reads; ++i) std::swap(order[i], order[i + rng.index(n - i)]);
    metrics::ConfusionCounts c;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = patients[order[i]];
      const int d = i < reads ? p.rad_diagnosis : (p.classifier_prob >= beta ? 1 : 0);
      metrics::tally(c, d == 1, p.outcome == 1);
    }
    kappa += kappa_or_nan(c);
    f1 += f1_or_nan(c);
    fnr += fnr_or_nan(c);
    fpr += fpr_or_nan(c);
  }
  const double inv = 1.0 / static_cast<double>(allocations);
  r.kappa = kappa * inv;
  r.f1 = f1 * inv;
  r.fnr = fnr * inv;
  r.fpr = fpr * inv;
  return r;
}

void write_agreement(const std::filesystem::path& path, std::span<const AgreementRow> rows) {
  auto os = open_out(path);
  os << "population,n,r_pos_c_pos,r_pos_c_neg,r_neg_c_pos,r_neg_c_neg\n";
  for (const auto& r : rows) {
    os << r.population << ',' << r.n;
    for (double f : r.fractions) os << ',' << format_metric(f);
    os << '\n';
  }
  finish(os, path);
}

void write_workload(const std::filesystem::path& path, std::span<const WorkloadRow> rows) {
  auto os = open_out(path);
  os << "population,n,pct_to_radiologist,radiologist_kappa,system_kappa,radiologist_f1,"
        "system_f1,rad_tp,rad_tn,rad_fp,rad_fn,sys_tp,sys_tn,sys_fp,sys_fn\n";
  for (const auto& r : rows) {
    const auto& a = r.radiologist;
    const auto& b = r.system;
    os << r.population << ',' << r.n << ',' << format_metric(r.pct_to_radiologist) << ','
       << format_metric(kappa_or_nan(a)) << ',' << format_metric(kappa_or_nan(b)) << ','
       << format_metric(f1_or_nan(a)) << ',' << format_metric(f1_or_nan(b)) << ',' << a.tp
       << ',' << a.tn << ',' << a.fp << ',' << a.fn << ',' << b.tp << ',' << b.tn << ','
       << b.fp << ',' << b.fn << '\n';
  }
  finish(os, path);
}

void write_comparison(const std::filesystem::path& path, std::span<const ComparisonRow> rows) {
  auto os = open_out(path);
  os << "method,frac_to_radiologist,kappa,f1,fnr,fpr,tp,tn,fp,fn\n";
  for (const auto& r : rows) {
    os << r.name << ',' << format_metric(r.frac_to_radiologist) << ','
       << format_metric(r.kappa) << ',' << format_metric(r.f1) << ',' << format_metric(r.fnr)
       << ',' << format_metric(r.fpr);
    if (r.counts) {
      os << ',' << r.counts->tp << ',' << r.counts->tn << ',' << r.counts->fp << ','
         << r.counts->fn;
    } else {
      os << ",,,,";
    }
    os << '\n';
  }
  finish(os, path);
}

void write_variance(const std::filesystem::path& path, std::span<const VarianceRow> rows) {
  auto os = open_out(path);
  os << "population,n,mean_density_variance,mean_age_variance\n";
  for (const auto& r : rows) {
    os << r.population << ',' << r.n << ',' << format_metric(r.mean_density_variance) << ','
       << format_metric(r.mean_age_variance) << '\n';
  }
  finish(os, path);
}

}  // namespace mammo::report

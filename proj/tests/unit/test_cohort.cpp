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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "mammo/cohort.hpp"
#include "mammo/error.hpp"

namespace mammo::cohort {
namespace {

namespace fs = std::filesystem;

fs::path fixture_csv() { return fs::path(MAMMO_FIXTURE_DIR) / "cohort3" / "cohort.csv"; }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mammo_cohort_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One shared standard-size cohort for the marginal checks.
const Cohort& standard_cohort() {
  static const Cohort c = generate_cohort(8162, StrataConfig{}, ReaderProfile::calibrated(), 2026);
  return c;
}

TEST(Strata, ConditionalsReproduceMarginals) {
  const StrataConfig s;
  EXPECT_NO_THROW(s.validate());
  const double p = s.prevalence;
  const auto am = s.age_given(true), ab = s.age_given(false);
  for (std::size_t k = 0; k < kAgeBins; ++k) {
    EXPECT_NEAR(p * am[k] + (1 - p) * ab[k], s.age_total[k], 1e-12);
  }
  const auto dm = s.density_given(true), db = s.density_given(false);
  for (std::size_t k = 0; k < kDensityBins; ++k) {
    EXPECT_NEAR(p * dm[k] + (1 - p) * db[k], s.density_total[k], 1e-12);
  }
  const auto sm = s.sign_given(true), sb = s.sign_given(false);
  EXPECT_EQ(sm[0], 0.0);  // every cancer shows a sign
  EXPECT_NEAR(std::accumulate(sb.begin(), sb.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR((1 - p) * sb[0], s.no_sign_total, 1e-12);
  EXPECT_NEAR(p * s.family_history_given(true) + (1 - p) * s.family_history_given(false),
              s.family_history_total, 1e-12);
}

TEST(Strata, RejectsBadDistributions) {
  StrataConfig s;
  s.prevalence = 1.2;
  EXPECT_THROW(s.validate(), Error);
  s = StrataConfig{};
  s.age_total[0] += 0.2;
  EXPECT_THROW(s.validate(), Error);
  s = StrataConfig{};
  s.no_sign_total = 0.9;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Generator, MarginalsMatchTargets) {
  const Cohort& c = standard_cohort();
  ASSERT_EQ(c.size(), 8162u);
  const double n = static_cast<double>(c.size());
  double malignant = 0, no_sign = 0, fh = 0;
  std::array<double, kAgeBins> ages{};
  std::array<double, kDensityBins> dens{};
  for (const auto& r : c) {
    malignant += r.outcome;
    fh += r.family_history;
    ages[age_bin(r.age)] += 1;
    dens[density_bin(r.mean_density())] += 1;
    if (r.outcome == 0 && r.sign == Sign::kNone) no_sign += 1;
  }
  const StrataConfig s;
  EXPECT_NEAR(malignant / n, s.prevalence, 0.015);
  EXPECT_NEAR(fh / n, s.family_history_total, 0.015);
  // Annotation noise relabels a few signs, so this one is looser.
  EXPECT_NEAR(no_sign / n, s.no_sign_total, 0.05);
  for (std::size_t k = 0; k < kAgeBins; ++k) EXPECT_NEAR(ages[k] / n, s.age_total[k], 0.015);
  for (std::size_t k = 0; k < kDensityBins; ++k) EXPECT_NEAR(dens[k] / n, s.density_total[k], 0.03);
}

TEST(Generator, ReaderMatchesCalibratedRates) {
  double fn = 0, pos = 0, fp = 0, neg = 0;
  for (const auto& r : standard_cohort()) {
    if (r.outcome == 1) {
      ++pos;
      fn += r.rad_diagnosis == 0;
    } else {
      ++neg;
      fp += r.rad_diagnosis == 1;
    }
  }
  EXPECT_NEAR(fn / pos, 36.0 / 156.0, 0.03);
  EXPECT_NEAR(fp / neg, 42.0 / 844.0, 0.01);
}

TEST(Generator, IdenticalAcrossThreadCounts) {
  const Cohort a = generate_cohort(40, StrataConfig{}, ReaderProfile::calibrated(), 9, 1);
  const Cohort b = generate_cohort(40, StrataConfig{}, ReaderProfile::calibrated(), 9, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].outcome, b[i].outcome);
    EXPECT_EQ(a[i].density, b[i].density);
    EXPECT_EQ(a[i].views, b[i].views);
  }
}

TEST(Generator, MalignantViewsAreMoreAsymmetric) {
  double vm = 0, nm = 0, vb = 0, nb = 0;
  for (const auto& r : standard_cohort()) {
    const double m = r.mean_density();
    double v = 0;
    for (double d : r.density) v += (d - m) * (d - m);
    v /= 4.0;
    (r.outcome ? vm : vb) += v;
    (r.outcome ? nm : nb) += 1;
  }
  EXPECT_GT(vm / nm, vb / nb);
}

TEST(Reader, CalibratedAggregatesHold) {
  const StrataConfig s;
  const ReaderProfile p = ReaderProfile::calibrated(s);
  const auto cm = s.conspicuity_given(true);
  const auto cb = s.conspicuity_given(false);
  double fnr = 0, fpr = 0;
  for (int k = 0; k < static_cast<int>(kConspicuityClasses); ++k) {
    fnr += cm[static_cast<std::size_t>(k)] * p.fnr_at(k, 0, false);
    fpr += cb[static_cast<std::size_t>(k)] * p.fpr_at(k, 0, false);
  }
  EXPECT_NEAR(fnr, 36.0 / 156.0, 1e-12);
  EXPECT_NEAR(fpr, 42.0 / 844.0, 1e-12);
  EXPECT_GT(p.fnr_at(0, 1, false), p.fnr_at(3, 1, false));
}

TEST(Reader, ConstantProfileExtremes) {
  Findings f;
  f.outcome = 1;
  f.sign = Sign::kSpiculated;
  f.conspicuity = 3;
  for (std::uint64_t s = 0; s < 50; ++s) {
    EXPECT_EQ(simulate_radiologist(f, ReaderProfile::constant(0.0, 0.0), s).diagnosis, 1);
    EXPECT_EQ(simulate_radiologist(f, ReaderProfile::constant(1.0, 0.0), s).diagnosis, 0);
  }
  EXPECT_THROW(ReaderProfile::constant(1.5, 0.0).validate(), Error);
}

TEST(Phantom, BrightFractionTracksDensity) {
  std::vector<double> means;
  for (double d : {5.0, 25.0, 45.0, 65.0, 85.0}) {
    double sum = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
      PhantomSpec spec;
      spec.density = d;
      spec.seed = s;
      sum += bright_fraction(generate_phantom(spec).image);
    }
    means.push_back(sum / 40.0);
  }
  for (std::size_t i = 1; i < means.size(); ++i) EXPECT_GT(means[i], means[i - 1]);
}

TEST(Phantom, LesionMaskOnlyWithASign) {
  PhantomSpec spec;
  spec.seed = 4;
  const Phantom clean = generate_phantom(spec);
  EXPECT_EQ(std::count(clean.lesion.begin(), clean.lesion.end(), 1), 0);
  EXPECT_EQ(clean.image.width, 40u);
  EXPECT_EQ(clean.image.height, 52u);
  spec.sign = Sign::kCircumscribed;
  spec.conspicuity = 3;
  const Phantom lesion = generate_phantom(spec);
  EXPECT_GT(std::count(lesion.lesion.begin(), lesion.lesion.end(), 1), 0);
  for (double v : lesion.image.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v * 255.0, std::round(v * 255.0));
  }
  EXPECT_EQ(generate_phantom(spec).image, lesion.image);
}

TEST(Partition, SizesAndDisjointness) {
  SplitSpec split;
  const Partition p = partition(8162, split);
  EXPECT_EQ(p.test.size(), 1000u);
  const std::size_t rest = 8162 - 1000;
  EXPECT_EQ(p.stage2.size(), static_cast<std::size_t>(std::floor(0.15 * rest)));
  EXPECT_EQ(p.stage3.size(), static_cast<std::size_t>(std::floor(0.15 * rest)));
  EXPECT_EQ(p.validation.size(), static_cast<std::size_t>(std::floor(0.10 * rest)));
  EXPECT_EQ(p.stage1.size() + p.stage2.size() + p.stage3.size() + p.validation.size(), rest);
  std::set<std::size_t> seen;
  for (const auto* part : {&p.test, &p.stage1, &p.stage2, &p.stage3, &p.validation}) {
    EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
    for (std::size_t i : *part) EXPECT_TRUE(seen.insert(i).second) << "index " << i << " repeated";
  }
  EXPECT_EQ(seen.size(), 8162u);
  EXPECT_EQ(*seen.rbegin(), 8161u);
}

TEST(Partition, RejectsImpossibleSplits) {
  SplitSpec split;
  EXPECT_THROW(partition(900, split), Error);
  split.fractions = {0.5, 0.5, 0.5, 0.1};
  EXPECT_THROW(split.validate(), Error);
}

TEST(Persistence, FixtureLoads) {
  const Cohort c = load_cohort(fixture_csv());
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].id, 0);
  EXPECT_EQ(c[1].sign, Sign::kCircumscribed);
  EXPECT_TRUE(c[1].family_history);
  EXPECT_EQ(c[2].outcome, 1);
  EXPECT_EQ(c[2].rad_diagnosis, 0);
  EXPECT_DOUBLE_EQ(c[2].density[3], 98.23);
  for (const auto& r : c) {
    for (const auto& v : r.views) {
      EXPECT_EQ(v.width, 40u);
      EXPECT_EQ(v.height, 52u);
    }
  }
  const Cohort bare = load_cohort(fixture_csv(), false);
  EXPECT_EQ(bare[0].views[0].size(), 0u);
}

TEST(Persistence, RoundTripThroughDisk) {
  const fs::path dir = scratch_dir("round_trip");
  const Cohort c = generate_cohort(12, StrataConfig{}, ReaderProfile::calibrated(), 5);
  save_cohort(dir / "cohort.csv", c);
  const Cohort back = load_cohort(dir / "cohort.csv");
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back[i].id, c[i].id);
    EXPECT_EQ(back[i].sign, c[i].sign);
    EXPECT_EQ(back[i].views, c[i].views);
    for (std::size_t v = 0; v < kViewCount; ++v) EXPECT_NEAR(back[i].density[v], c[i].density[v], 1e-3);
  }
  SplitSpec split;
  split.holdout = 2;
  const Partition p = partition(c.size(), split);
  save_partition(dir / "partition.csv", c, p);
  const Partition q = load_partition(dir / "partition.csv", c);
  EXPECT_EQ(q.test, p.test);
  EXPECT_EQ(q.stage1, p.stage1);
  EXPECT_EQ(q.validation, p.validation);
}

TEST(Persistence, LoadErrors) {
  try {
    load_cohort(scratch_dir("missing") / "nope.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
  }
  const fs::path dir = scratch_dir("bad");
  std::ifstream in(fixture_csv());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  auto write = [&](const std::string& body) {
    std::ofstream os(dir / "c.csv");
    os << header << '\n' << body << '\n';
  };
  auto expect_parse_error = [&](const std::string& body) {
    write(body);
    try {
      load_cohort(dir / "c.csv", false);
      ADD_FAILURE() << "accepted: " << body;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParse);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  };
  expect_parse_error(row.substr(0, row.rfind(',')));
  std::string bad_sign = row;
  bad_sign.replace(bad_sign.find(",none,"), 6, ",blob,");
  expect_parse_error(bad_sign);
  std::string bad_age = row;
  bad_age.replace(bad_age.find(",59,"), 4, ",5x,");
  expect_parse_error(bad_age);
}

}  // namespace
}  // namespace mammo::cohort

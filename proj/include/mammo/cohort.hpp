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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mammo/imageproc.hpp"
#include "mammo/labels.hpp"
#include "mammo/mtlnet.hpp"

// Synthetic data engine: phantom view images whose labels hold by
// construction, a stratified patient generator, a simulated radiologist,
// dataset partitioning and CSV/PGM persistence.
namespace mammo::cohort {

struct PhantomSpec {
  double density = 30.0;  // VAS %, controls the bright-tissue fraction
  Sign sign = Sign::kNone;
  int conspicuity = 0;     // 0..3, scales lesion contrast
  bool malignant = false;  // stronger contrast, irregular margins
  bool overlap = false;    // benign overlapping-tissue blob (not a lesion)
  bool mirrored = false;   // left-breast views: chest wall on the right
  double age = 57.0;       // years; breast outline grows slightly with age
  std::uint64_t seed = 0;
};

struct Phantom {
  image::GrayImage image;             // 40 x 52, values in k / 255
  std::vector<std::uint8_t> lesion;   // 1 where the lesion was drawn
};

Phantom generate_phantom(const PhantomSpec& spec);

// Fraction of pixels brighter than the dense-tissue threshold.
double bright_fraction(const image::GrayImage& img);

inline constexpr std::size_t kAgeBins = 4;      // 40-49, 50-59, 60-69, 70-73
inline constexpr std::size_t kDensityBins = 4;  // 0-24, 25-49, 50-74, 75-100
inline constexpr std::size_t kLesionSigns = 5;  // every sign except none

std::size_t age_bin(int years) noexcept;
std::size_t density_bin(double vas) noexcept;

// Target distribution of the generated population. "total" columns are
// population marginals, "cancer" columns are conditional on a malignant
// outcome; benign-conditional values are derived so that the marginals hold.
struct StrataConfig {
  double prevalence = 1677.0 / 8162.0;
  std::array<double, kAgeBins> age_total{0.06, 0.59, 0.29, 0.06};
  std::array<double, kAgeBins> age_cancer{0.03, 0.40, 0.45, 0.12};
  std::array<double, kDensityBins> density_total{0.27, 0.43, 0.23, 0.07};
  std::array<double, kDensityBins> density_cancer{0.33, 0.38, 0.24, 0.05};
  // circumscribed, spiculated, micro-calcification, distortion, asymmetry
  std::array<double, kLesionSigns> sign_total{0.31, 0.13, 0.17, 0.08, 0.31};
  std::array<double, kLesionSigns> sign_cancer{0.14, 0.44, 0.24, 0.09, 0.09};
  // Share of all patients without any radiological sign (all benign).
  double no_sign_total = 0.314;
  // Conspicuity 0..3 of patients that have a sign.
  std::array<double, kConspicuityClasses> conspicuity{0.10, 0.25, 0.35, 0.30};
  double family_history_total = 0.164;
  double family_history_cancer = 0.25;
  std::array<double, 3> recall{0.261, 0.615, 0.124};
  // Cross-view density spread (VAS points, one standard deviation).
  double spread_malignant = 15.0;
  double spread_benign = 3.0;
  double overlap_probability = 0.3;  // benign patients with a confounder blob

  void validate() const;

  // Class-conditional distributions implied by the columns above.
  std::array<double, kAgeBins> age_given(bool malignant) const;
  std::array<double, kDensityBins> density_given(bool malignant) const;
  // Index 0 is "none", 1..5 the lesion signs.
  std::array<double, kSignClasses> sign_given(bool malignant) const;
  std::array<double, kConspicuityClasses> conspicuity_given(bool malignant) const;
  double family_history_given(bool malignant) const;
};

// Simulated radiologist: per-stratum error rates keyed by (conspicuity,
// density bin, family history), plus categorical annotation noise.
struct ReaderProfile {
  static constexpr std::size_t kStrata = kConspicuityClasses * kDensityBins * 2;
  std::array<double, kStrata> fnr{};
  std::array<double, kStrata> fpr{};
  double annotation_noise = 0.05;

  static std::size_t stratum(int conspicuity, std::size_t density_bin,
                             bool family_history);
  double fnr_at(int conspicuity, std::size_t density_bin, bool family_history) const;
  double fpr_at(int conspicuity, std::size_t density_bin, bool family_history) const;

  static ReaderProfile constant(double fnr, double fpr, double annotation_noise = 0.0);
  // Aggregate FNR 36/156 and FPR 42/844 under `strata`, modulated by
  // conspicuity (misses fall and false alarms rise with visibility).
  static ReaderProfile calibrated(const StrataConfig& strata = {});

  void validate() const;
};

struct PatientRecord {
  std::int64_t id = 0;
  int age = 57;
  bool family_history = false;
  RecallType recall = RecallType::kTwoReaders;
  std::array<double, kViewCount> density{};  // VAS % per view
  // Radiologist annotations (ground truth plus annotation noise).
  Sign sign = Sign::kNone;
  int suspicion = 0;
  int conspicuity = 0;
  int outcome = 0;
  int rad_diagnosis = 0;
  std::array<image::GrayImage, kViewCount> views;
  std::array<std::string, kViewCount> image_paths;  // relative to the CSV

  // 0 = right, 1 = left; the side that carries the finding.
  int lesion_side() const noexcept;
  double mean_density() const noexcept;
  // Labels of one view: findings only on the lesion side; the diagnosis is
  // the patient outcome for every view.
  mtl::ViewLabels view_labels(View v) const;
};

using Cohort = std::vector<PatientRecord>;

// Ground-truth findings before the radiologist reads the case.
struct Findings {
  Sign sign = Sign::kNone;
  int suspicion = 0;
  int conspicuity = 0;
  int outcome = 0;
  std::size_t density_bin = 0;
  bool family_history = false;
};

struct RadiologistRead {
  int diagnosis = 0;
  Sign sign = Sign::kNone;
  int suspicion = 0;
  int conspicuity = 0;
};

// Suspicion implied by (sign, conspicuity, outcome).
int suspicion_rule(Sign sign, int conspicuity, int outcome);

RadiologistRead simulate_radiologist(const Findings& truth, const ReaderProfile& profile,
                                     std::uint64_t seed);

// Patient i is generated from derive_seed(seed, i) so output does not depend
// on the thread count.
Cohort generate_cohort(std::size_t n, const StrataConfig& strata,
                       const ReaderProfile& profile, std::uint64_t seed,
                       std::size_t threads = 1);

struct SplitSpec {
  std::array<double, 4> fractions{0.60, 0.15, 0.15, 0.10};  // stage 1/2/3, validation
  std::size_t holdout = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Partition {
  std::vector<std::size_t> test;  // held-out patients, drawn first
  std::vector<std::size_t> stage1;
  std::vector<std::size_t> stage2;
  std::vector<std::size_t> stage3;
  std::vector<std::size_t> validation;
};

// Disjoint, covering, sorted index sets. Part sizes: floor(fraction * rest)
// for stages 2, 3 and validation; stage 1 takes the remainder.
Partition partition(std::size_t n, const SplitSpec& split);

void save_partition(const std::filesystem::path& path, const Cohort& cohort,
                    const Partition& parts);
Partition load_partition(const std::filesystem::path& path, const Cohort& cohort);

// CSV plus sidecar PGM files under <dir of path>/images/.
void save_cohort(const std::filesystem::path& path, const Cohort& cohort);
void save_cohort_csv(const std::filesystem::path& path, const Cohort& cohort);
Cohort load_cohort(const std::filesystem::path& path, bool with_images = true);

}  // namespace mammo::cohort

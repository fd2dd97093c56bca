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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mammo/cohort.hpp"
#include "mammo/fusion.hpp"
#include "mammo/imageproc.hpp"
#include "mammo/mtlnet.hpp"
#include "mammo/triage.hpp"

// Run configuration. The file format is line based:
//
//   # comment
//   seed = 7
//   [mtl]
//   lr = 1e-3, 1e-4
//
// Keys after a [section] header are addressed as "section.key". Unknown keys,
// malformed values and out-of-range settings are errors (ErrorKind::kConfig).
namespace mammo {

struct CohortSettings {
  std::size_t n = 8162;
  cohort::StrataConfig strata;
  std::string reader = "calibrated";  // or "constant"
  double reader_fnr = 36.0 / 156.0;   // used by the constant reader
  double reader_fpr = 42.0 / 844.0;
  double annotation_noise = 0.05;
  cohort::SplitSpec split;

  cohort::ReaderProfile reader_profile() const;
};

struct MtlSettings {
  std::vector<std::size_t> hidden{128, 64};
  double dropout = 0.2;
  mtl::TrainSchedule schedule;
  mtl::LossOptions loss;
};

struct ClassifierSettings {
  std::vector<std::size_t> hidden{128, 64, 32, 16};
  double dropout = 0.2;
  fusion::ClassifierSchedule schedule;
  std::size_t tta = 16;
};

struct TriageSettings {
  triage::CandidateSchedule schedule;
  triage::GridSpec grid;
};

struct ReportSettings {
  std::size_t random_allocations = 100;
  std::size_t saliency_patients = 1;
  int conspicuity_high = 2;    // conspicuity >= this is "high"
  int suspicion_high = 4;      // suspicion >= this is "high"
  double density_high = 38.2;  // mean VAS >= this is "high"
  int age_split = 57;          // age >= this is "older"
};

struct Config {
  std::uint64_t seed = 2026;
  CohortSettings cohort;
  image::AugmentSpec augment;  // training and test-time augmentation
  MtlSettings mtl;
  ClassifierSettings classifier;
  TriageSettings triage;
  ReportSettings report;

  // Standard run: augmentation limited to flips and pixel noise (see README).
  static Config standard();

  // Applies "key = value"; key may be "section.key".
  void set(const std::string& key, const std::string& value);
  void validate() const;
  // Every key with its current value in a fixed order, grouped by section.
  // Parsing the output yields an identical Config.
  std::string resolved() const;
  std::vector<std::string> keys() const;
};

Config load_config(const std::filesystem::path& path);
// Parses text in the config format on top of `base`.
Config parse_config(const std::string& text, Config base = Config::standard(),
                    const std::string& origin = "<string>");

}  // namespace mammo

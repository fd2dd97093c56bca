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

#include "mammo/labels.hpp"

#include <string>

#include "mammo/error.hpp"

namespace mammo {
namespace {

constexpr std::array<std::string_view, kSignClasses> kSignNames = {
    "none", "circumscribed", "spiculated", "micro_calcification", "distortion",
    "asymmetrical_density"};
constexpr std::array<std::string_view, 3> kRecallNames = {"one_reader", "two_readers",
                                                          "arbitration"};

}  // namespace

std::string_view view_name(View v) noexcept {
  switch (v) {
    case View::kMloR: return "mlo_r";
    case View::kMloL: return "mlo_l";
    case View::kCcR: return "cc_r";
    case View::kCcL: return "cc_l";
  }
  return "?";
}

std::string_view sign_name(Sign s) noexcept {
  return kSignNames[static_cast<std::size_t>(s)];
}

Sign parse_sign(std::string_view name) {
  for (std::size_t i = 0; i < kSignNames.size(); ++i) {
    if (kSignNames[i] == name) return static_cast<Sign>(i);
  }
  fail(ErrorKind::kParse, "unknown sign '" + std::string(name) + "'");
}

std::string_view suspicion_name(int level) {
  static constexpr std::array<std::string_view, kSuspicionClasses> names = {
      "normal", "benign", "probably_benign", "suspicious", "malignant"};
  if (level < 0 || level >= static_cast<int>(names.size())) fail("suspicion level out of range");
  return names[static_cast<std::size_t>(level)];
}

std::string_view conspicuity_name(int level) {
  static constexpr std::array<std::string_view, kConspicuityClasses> names = {
      "not_visible", "barely_visible", "visible_not_clear", "clearly_visible"};
  if (level < 0 || level >= static_cast<int>(names.size())) fail("conspicuity level out of range");
  return names[static_cast<std::size_t>(level)];
}

std::string_view recall_name(RecallType r) noexcept {
  return kRecallNames[static_cast<std::size_t>(r)];
}

RecallType parse_recall(std::string_view name) {
  for (std::size_t i = 0; i < kRecallNames.size(); ++i) {
    if (kRecallNames[i] == name) return static_cast<RecallType>(i);
  }
  fail(ErrorKind::kParse, "unknown recall type '" + std::string(name) + "'");
}

}  // namespace mammo

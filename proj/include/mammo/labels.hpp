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
#include <string>
#include <string_view>

// Label vocabularies shared by the cohort generator, the per-view model and
// the reports.
namespace mammo {

enum class View : int { kMloR = 0, kMloL, kCcR, kCcL };
inline constexpr std::size_t kViewCount = 4;
inline constexpr std::array<View, kViewCount> kAllViews = {View::kMloR, View::kMloL,
                                                           View::kCcR, View::kCcL};
std::string_view view_name(View v) noexcept;
// Views 0 and 2 image the right breast, 1 and 3 the left.
inline constexpr int view_side(View v) noexcept {
  return static_cast<int>(v) % 2;
}

inline constexpr std::size_t kDiagnosisClasses = 2;
inline constexpr std::size_t kSignClasses = 6;
inline constexpr std::size_t kSuspicionClasses = 5;
inline constexpr std::size_t kConspicuityClasses = 4;

enum class Sign : int {
  kNone = 0,
  kCircumscribed,
  kSpiculated,
  kMicroCalcification,
  kDistortion,
  kAsymmetricDensity
};
std::string_view sign_name(Sign s) noexcept;
Sign parse_sign(std::string_view name);

// Suspicion levels 0..4: normal, benign, probably benign, suspicious,
// malignant. Conspicuity levels 0..3: not visible, barely visible, visible
// but not clear, clearly visible.
std::string_view suspicion_name(int level);
std::string_view conspicuity_name(int level);

enum class RecallType : int { kOneReader = 0, kTwoReaders, kArbitration };
std::string_view recall_name(RecallType r) noexcept;
RecallType parse_recall(std::string_view name);

inline constexpr double kMinAge = 40.0;
inline constexpr double kMaxAge = 73.0;
inline constexpr double normalize_age(double years) noexcept {
  return (years - kMinAge) / (kMaxAge - kMinAge);
}
inline constexpr double denormalize_age(double unit) noexcept {
  return kMinAge + unit * (kMaxAge - kMinAge);
}

}  // namespace mammo

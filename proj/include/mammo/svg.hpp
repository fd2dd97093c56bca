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

#include <span>
#include <string>

#include "mammo/imageproc.hpp"
#include "mammo/triage.hpp"

// Self-contained SVG documents written as plain markup. Numbers are printed
// with fixed precision so identical inputs give identical bytes.
namespace mammo::svg {

struct CurveReference {
  double fnr = -1.0;  // radiologist reference lines; negative = none
  double fpr = -1.0;
  double chosen_frac = -1.0;  // selected operating point; negative = none
};

// FNR and FPR against the fraction of patients read by the radiologist.
std::string operating_curve(std::span<const triage::OperatingPoint> points,
                            const CurveReference& ref = {});

// The view image next to its saliency heatmap (scaled to its own maximum).
std::string saliency(const image::GrayImage& img, const image::GrayImage& heat,
                     const std::string& title);

}  // namespace mammo::svg

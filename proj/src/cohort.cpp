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

#include "mammo/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mammo/csv.hpp"
#include "mammo/error.hpp"
#include "mammo/parallel.hpp"
#include "mammo/random.hpp"

namespace mammo::cohort {
namespace {

constexpr std::size_t W = mtl::kImageWidth;
constexpr std::size_t H = mtl::kImageHeight;

constexpr double kBackground = 0.04;
constexpr double kFatTissue = 0.30;
constexpr double kDenseBoost = 0.10;
constexpr double kBrightThreshold = 0.36;
// Lesion brightness above dense tissue per conspicuity level; malignant
// lesions are brighter. A lesion lifts every covered pixel to at least this
// level, so dense tissue masks it and fatty tissue does not.
constexpr std::array<double, kConspicuityClasses> kContrast{0.075, 0.15, 0.255, 0.39};
constexpr double kMalignantContrast = 2.2;
// Lesion radii relative to the nominal sizes in draw_lesion().
constexpr double kLesionScale = 1.5;

constexpr std::array<int, kAgeBins + 1> kAgeEdges{40, 50, 60, 70, 74};
constexpr std::array<double, kDensityBins + 1> kDensityEdges{0.0, 25.0, 50.0, 75.0, 100.0};

template <std::size_t N>
void check_distribution(const std::array<double, N>& p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorKind::kConfig, std::string("invalid proportions: ") + what);
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    fail(ErrorKind::kConfig, std::string("invalid proportions: ") + what + " must sum to 1");
  }
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorKind::kConfig, std::string("invalid proportions: ") + what);
  }
}

template <std::size_t N>
std::array<double, N> normalized(std::array<double, N> p) {
  double sum = 0.0;
  for (double& v : p) {
    v = std::max(v, 0.0);
    sum += v;
  }
  if (sum <= 0.0) fail(ErrorKind::kConfig, "invalid proportions: empty distribution");
  for (double& v : p) v /= sum;
  return p;
}

// Cancer column restricted to bins that exist in the population, and the
// benign column that reproduces the population marginal.
template <std::size_t N>
std::array<double, N> conditional(const std::array<double, N>& total,
                                  const std::array<double, N>& cancer, double share,
                                  bool malignant) {
  std::array<double, N> c{};
  double mass = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    c[i] = total[i] > 0.0 ? cancer[i] : 0.0;
    mass += c[i];
  }
  c = mass > 0.0 ? normalized(c) : total;
  if (malignant) return c;
  if (share >= 1.0) return total;
  std::array<double, N> b{};
  for (std::size_t i = 0; i < N; ++i) b[i] = (total[i] - share * c[i]) / (1.0 - share);
  return normalized(b);
}

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

struct Outline {
  double ax = 31.0;
  double ay = 24.0;
  double cy = (H - 1) * 0.5;
  bool inside(double x, double y) const {
    const double u = x / ax, v = (y - cy) / ay;
    return u * u + v * v <= 1.0;
  }
};

// Lesion intensity profile in [0, 1] on the raster, centred at (cx, cy).
std::vector<double> draw_lesion(Sign sign, bool malignant, double cx, double cy, Rng& rng, double S) {
  std::vector<double> L(W * H, 0.0);
  auto each = [&](auto&& fn) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        L[y * W + x] = std::clamp(fn(static_cast<double>(x), static_cast<double>(y)), 0.0, 1.0);
      }
    }
  };
  switch (sign) {
    case Sign::kNone:
      break;
    case Sign::kCircumscribed: {
      const double r = S*rng.uniform(3.0, 5.0);
      const double lobes = malignant ? 0.25 : 0.0;
      const double k = static_cast<double>(5 + rng.index(3));
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      each([&](double x, double y) {
        const double dx = x - cx, dy = y - cy;
        const double rr = r * (1.0 + lobes * std::sin(k * std::atan2(dy, dx) + phase));
        return (rr - std::sqrt(dx * dx + dy * dy)) / 1.0 + 0.5;
      });
      break;
    }
    case Sign::kSpiculated: {
      const double core = S*rng.uniform(2.0, 3.0);
      const std::size_t spikes = 6 + rng.index(4);
      std::vector<std::array<double, 2>> tips;
      for (std::size_t s = 0; s < spikes; ++s) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double len = S*rng.uniform(5.0, 8.0);
        tips.push_back({cx + len * std::cos(a), cy + len * std::sin(a)});
      }
      each([&](double x, double y) {
        const double dx = x - cx, dy = y - cy;
        double v = core - std::sqrt(dx * dx + dy * dy) + 0.5;
        for (const auto& t : tips) {
          v = std::max(v, 0.8 * (1.0 - segment_distance(x, y, cx, cy, t[0], t[1]) / 0.8));
        }
        return v;
      });
      break;
    }
    case Sign::kMicroCalcification: {
      const std::size_t dots = 8 + rng.index(5);
      std::vector<std::array<double, 2>> pos;
      for (std::size_t s = 0; s < dots; ++s) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double rad = S*4.0 * std::sqrt(rng.uniform());
        pos.push_back({cx + rad * std::cos(a), cy + rad * std::sin(a)});
      }
      each([&](double x, double y) {
        double v = 0.0;
        for (const auto& p : pos) {
          const double dx = x - p[0], dy = y - p[1];
          v = std::max(v, std::exp(-(dx * dx + dy * dy) / (2.0 * 0.6 * 0.6 * S * S)));
        }
        return 1.6 * v;
      });
      break;
    }
    case Sign::kDistortion: {
      const std::size_t lines = 4 + rng.index(3);
      std::vector<std::array<double, 2>> ends;
      for (std::size_t s = 0; s < lines; ++s) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double len = S*rng.uniform(6.0, 10.0);
        ends.push_back({cx + len * std::cos(a), cy + len * std::sin(a)});
      }
      each([&](double x, double y) {
        double v = 0.0;
        for (const auto& e : ends) {
          v = std::max(v, 0.8 * (1.0 - segment_distance(x, y, cx, cy, e[0], e[1]) / 0.7));
        }
        return v;
      });
      break;
    }
    case Sign::kAsymmetricDensity: {
      const double sx = S*rng.uniform(4.0, 6.0);
      const double sy = S*rng.uniform(4.0, 6.0);
      each([&](double x, double y) {
        const double dx = (x - cx) / sx, dy = (y - cy) / sy;
        return 0.8 * std::exp(-0.5 * (dx * dx + dy * dy));
      });
      break;
    }
  }
  return L;
}

// Pulls tissue toward (cx, cy) within radius R, the architectural warp of a
// distortion.
void warp_toward(std::vector<double>& tissue, double cx, double cy, double R) {
  const std::vector<double> src = tissue;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double rho = std::sqrt(dx * dx + dy * dy);
      if (rho >= R) continue;
      const double k = 1.0 + 0.45 * (1.0 - rho / R);
      const double sx = std::clamp(cx + dx * k, 0.0, static_cast<double>(W - 1));
      const double sy = std::clamp(cy + dy * k, 0.0, static_cast<double>(H - 1));
      const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
      const std::size_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      tissue[y * W + x] = (src[y0 * W + x0] * (1 - fx) + src[y0 * W + x1] * fx) * (1 - fy) +
                          (src[y1 * W + x0] * (1 - fx) + src[y1 * W + x1] * fx) * fy;
    }
  }
}

std::array<double, 2> lesion_centre(const Outline& o, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double x = rng.uniform(6.0, 0.65 * o.ax);
    const double y = rng.uniform(o.cy - 0.5 * o.ay, o.cy + 0.5 * o.ay);
    if (o.inside(x + 4.0, y) && o.inside(x, y + 4.0) && o.inside(x, y - 4.0)) return {x, y};
  }
  return {0.4 * o.ax, o.cy};
}

int reflect(int v, int n) {
  if (v < 0) return 1;
  if (v >= n) return n - 2;
  return v;
}

}  // namespace

std::size_t age_bin(int years) noexcept {
  for (std::size_t b = kAgeBins; b-- > 0;) {
    if (years >= kAgeEdges[b]) return b;
  }
  return 0;
}

std::size_t density_bin(double vas) noexcept {
  for (std::size_t b = kDensityBins; b-- > 0;) {
    if (vas >= kDensityEdges[b]) return b;
  }
  return 0;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  if (!(spec.density >= 0.0 && spec.density <= 100.0)) fail("phantom density must be in [0, 100]");
  if (spec.conspicuity < 0 || spec.conspicuity >= static_cast<int>(kConspicuityClasses)) {
    fail("phantom conspicuity out of range");
  }
  Rng rng(spec.seed);
  Outline outline;
  outline.ax = 31.0 + 0.1 * (std::clamp(spec.age, kMinAge, kMaxAge) - 57.0);

  // Smooth random field: the densest quantile becomes fibroglandular tissue.
  constexpr int kBlobs = 14;
  std::array<std::array<double, 4>, kBlobs> blobs{};
  for (auto& b : blobs) {
    b = {rng.uniform(0.0, outline.ax), rng.uniform(outline.cy - outline.ay, outline.cy + outline.ay),
         rng.uniform(2.5, 5.0), rng.uniform(0.5, 1.0)};
  }
  std::vector<double> field(W * H, 0.0);
  std::vector<double> inside_values;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      double f = 0.05 * rng.normal();
      for (const auto& b : blobs) {
        const double dx = fx - b[0], dy = fy - b[1];
        f += b[3] * std::exp(-(dx * dx + dy * dy) / (2.0 * b[2] * b[2]));
      }
      field[y * W + x] = f;
      if (outline.inside(fx, fy)) inside_values.push_back(f);
    }
  }
  double threshold = std::numeric_limits<double>::infinity();
  if (spec.density > 0.0 && !inside_values.empty()) {
    const double q = 1.0 - spec.density / 100.0;
    auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(inside_values.size())));
    k = std::min(k, inside_values.size() - 1);
    std::nth_element(inside_values.begin(), inside_values.begin() + static_cast<long>(k),
                     inside_values.end());
    threshold = inside_values[k];
  }

  std::vector<double> tissue(W * H, kBackground);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      if (!outline.inside(fx, fy)) continue;
      const double dense = std::isfinite(threshold)
                               ? smoothstep(threshold - 0.08, threshold + 0.08, field[y * W + x])
                               : 0.0;
      tissue[y * W + x] = kFatTissue + kDenseBoost * dense;
    }
  }

  if (spec.overlap) {
    const auto c = lesion_centre(outline, rng);
    const double r = rng.uniform(3.0, 5.0);
    const double elong = rng.uniform(1.0, 1.6);
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        const double dx = (static_cast<double>(x) - c[0]) / elong;
        const double dy = static_cast<double>(y) - c[1];
        tissue[y * W + x] += 0.14 * smoothstep(0.0, 1.5, r - std::sqrt(dx * dx + dy * dy));
      }
    }
  }

  Phantom out;
  out.lesion.assign(W * H, 0);
  if (spec.sign != Sign::kNone) {
    const auto c = lesion_centre(outline, rng);
    if (spec.sign == Sign::kDistortion) warp_toward(tissue, c[0], c[1], 8.0);
    const auto L = draw_lesion(spec.sign, spec.malignant, c[0], c[1], rng, kLesionScale);
    const double contrast = kContrast[static_cast<std::size_t>(spec.conspicuity)] *
                            (spec.malignant ? kMalignantContrast : 1.0);
    for (std::size_t i = 0; i < W * H; ++i) {
      const double level = kFatTissue + kDenseBoost + contrast;
      tissue[i] += L[i] * std::max(0.0, level - tissue[i]);
      out.lesion[i] = L[i] >= 0.3 ? 1 : 0;
    }
  }

  out.image = image::GrayImage(W, H);
  for (std::size_t i = 0; i < W * H; ++i) {
    out.image.pixels[i] = tissue[i] + 0.015 * rng.normal();
  }
  out.image = image::quantize8(out.image);
  if (spec.mirrored) {
    out.image = image::hflip(out.image);
    std::vector<std::uint8_t> m(W * H);
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) m[y * W + x] = out.lesion[y * W + (W - 1 - x)];
    }
    out.lesion = std::move(m);
  }
  return out;
}

double bright_fraction(const image::GrayImage& img) {
  if (img.size() == 0) return 0.0;
  std::size_t n = 0;
  for (double v : img.pixels) n += v > kBrightThreshold ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(img.size());
}

void StrataConfig::validate() const {
  check_probability(prevalence, "prevalence");
  check_distribution(age_total, "age_total");
  check_distribution(age_cancer, "age_cancer");
  check_distribution(density_total, "density_total");
  check_distribution(density_cancer, "density_cancer");
  check_distribution(sign_total, "sign_total");
  check_distribution(sign_cancer, "sign_cancer");
  check_distribution(conspicuity, "conspicuity");
  check_distribution(recall, "recall");
  check_probability(no_sign_total, "no_sign_total");
  check_probability(family_history_total, "family_history_total");
  check_probability(family_history_cancer, "family_history_cancer");
  check_probability(overlap_probability, "overlap_probability");
  if (no_sign_total > 1.0 - prevalence + 1e-12) {
    fail(ErrorKind::kConfig, "invalid proportions: no_sign_total exceeds the benign share");
  }
  if (!(spread_malignant >= 0.0) || !(spread_benign >= 0.0)) {
    fail(ErrorKind::kConfig, "density spreads must be >= 0");
  }
}

std::array<double, kAgeBins> StrataConfig::age_given(bool malignant) const {
  return conditional(age_total, age_cancer, prevalence, malignant);
}

std::array<double, kDensityBins> StrataConfig::density_given(bool malignant) const {
  return conditional(density_total, density_cancer, prevalence, malignant);
}

std::array<double, kSignClasses> StrataConfig::sign_given(bool malignant) const {
  // The sign columns describe patients that have a sign; every cancer has one.
  const double signed_share = 1.0 - no_sign_total;
  const double q = signed_share > 0.0 ? std::min(1.0, prevalence / signed_share) : 1.0;
  const auto lesions = conditional(sign_total, sign_cancer, q, malignant);
  std::array<double, kSignClasses> p{};
  const double none = malignant ? 0.0 : std::min(1.0, no_sign_total / (1.0 - prevalence));
  p[0] = none;
  for (std::size_t i = 0; i < kLesionSigns; ++i) p[i + 1] = (1.0 - none) * lesions[i];
  return p;
}

std::array<double, kConspicuityClasses> StrataConfig::conspicuity_given(bool malignant) const {
  const double none = sign_given(malignant)[0];
  std::array<double, kConspicuityClasses> p{};
  for (std::size_t k = 0; k < kConspicuityClasses; ++k) p[k] = (1.0 - none) * conspicuity[k];
  p[0] += none;
  return p;
}

double StrataConfig::family_history_given(bool malignant) const {
  if (malignant) return family_history_cancer;
  if (prevalence >= 1.0) return family_history_total;
  const double b = (family_history_total - prevalence * family_history_cancer) / (1.0 - prevalence);
  return std::clamp(b, 0.0, 1.0);
}

std::size_t ReaderProfile::stratum(int conspicuity, std::size_t density_bin,
                                   bool family_history) {
  if (conspicuity < 0 || conspicuity >= static_cast<int>(kConspicuityClasses) ||
      density_bin >= kDensityBins) {
    fail("unknown stratum");
  }
  return (static_cast<std::size_t>(conspicuity) * kDensityBins + density_bin) * 2 +
         (family_history ? 1 : 0);
}

double ReaderProfile::fnr_at(int conspicuity, std::size_t density_bin, bool family_history) const {
  return fnr[stratum(conspicuity, density_bin, family_history)];
}

double ReaderProfile::fpr_at(int conspicuity, std::size_t density_bin, bool family_history) const {
  return fpr[stratum(conspicuity, density_bin, family_history)];
}

ReaderProfile ReaderProfile::constant(double fnr_value, double fpr_value, double noise) {
  ReaderProfile p;
  p.fnr.fill(fnr_value);
  p.fpr.fill(fpr_value);
  p.annotation_noise = noise;
  p.validate();
  return p;
}

ReaderProfile ReaderProfile::calibrated(const StrataConfig& strata) {
  strata.validate();
  constexpr double kFnr = 36.0 / 156.0;
  constexpr double kFpr = 42.0 / 844.0;
  constexpr std::array<double, kConspicuityClasses> miss{1.5, 7.0 / 6.0, 5.0 / 6.0, 0.5};
  constexpr std::array<double, kConspicuityClasses> alarm{0.5, 5.0 / 6.0, 7.0 / 6.0, 1.5};
  const auto cm = strata.conspicuity_given(true);
  const auto cb = strata.conspicuity_given(false);
  double em = 0.0, eb = 0.0;
  for (std::size_t k = 0; k < kConspicuityClasses; ++k) {
    em += cm[k] * miss[k];
    eb += cb[k] * alarm[k];
  }
  ReaderProfile p;
  for (int k = 0; k < static_cast<int>(kConspicuityClasses); ++k) {
    for (std::size_t d = 0; d < kDensityBins; ++d) {
      for (bool fh : {false, true}) {
        const std::size_t s = stratum(k, d, fh);
        p.fnr[s] = std::min(1.0, kFnr * miss[static_cast<std::size_t>(k)] / em);
        p.fpr[s] = std::min(1.0, kFpr * alarm[static_cast<std::size_t>(k)] / eb);
      }
    }
  }
  p.validate();
  return p;
}

void ReaderProfile::validate() const {
  for (std::size_t i = 0; i < kStrata; ++i) {
    if (!(fnr[i] >= 0.0 && fnr[i] <= 1.0) || !(fpr[i] >= 0.0 && fpr[i] <= 1.0)) {
      fail(ErrorKind::kConfig, "reader rates must be in [0, 1]");
    }
  }
  if (!(annotation_noise >= 0.0 && annotation_noise <= 1.0)) {
    fail(ErrorKind::kConfig, "annotation noise must be in [0, 1]");
  }
}

int PatientRecord::lesion_side() const noexcept {
  return static_cast<int>(splitmix64(static_cast<std::uint64_t>(id)) & 1U);
}

double PatientRecord::mean_density() const noexcept {
  double s = 0.0;
  for (double d : density) s += d;
  return s / static_cast<double>(kViewCount);
}

mtl::ViewLabels PatientRecord::view_labels(View v) const {
  mtl::ViewLabels l;
  l.diagnosis = outcome;
  const bool finding = view_side(v) == lesion_side();
  l.sign = finding ? static_cast<int>(sign) : 0;
  l.suspicion = finding ? suspicion : 0;
  l.conspicuity = finding ? conspicuity : 0;
  l.density = density[static_cast<std::size_t>(v)] / 100.0;
  l.age = normalize_age(static_cast<double>(age));
  return l;
}

int suspicion_rule(Sign sign, int conspicuity, int outcome) {
  if (sign == Sign::kNone) return 0;
  if (outcome == 1) return conspicuity >= 2 ? 4 : 3;
  return conspicuity <= 1 ? 2 : 1;
}

RadiologistRead simulate_radiologist(const Findings& truth, const ReaderProfile& profile,
                                     std::uint64_t seed) {
  Rng rng(seed);
  RadiologistRead r;
  const std::size_t s = ReaderProfile::stratum(truth.conspicuity, truth.density_bin,
                                               truth.family_history);
  const double u = rng.uniform();
  if (truth.outcome == 1) {
    r.diagnosis = u < profile.fnr[s] ? 0 : 1;
  } else {
    r.diagnosis = u < profile.fpr[s] ? 1 : 0;
  }
  r.sign = truth.sign;
  r.suspicion = truth.suspicion;
  r.conspicuity = truth.conspicuity;
  // Annotation noise: the nominal sign jumps to another category, ordinal
  // scales move one step.
  const double nz = profile.annotation_noise;
  if (rng.uniform() < nz) {
    const auto shift = 1 + rng.index(kSignClasses - 1);
    r.sign = static_cast<Sign>((static_cast<std::size_t>(truth.sign) + shift) % kSignClasses);
  }
  if (rng.uniform() < nz) {
    const int step = rng.bernoulli(0.5) ? 1 : -1;
    r.suspicion = reflect(truth.suspicion + step, static_cast<int>(kSuspicionClasses));
  }
  if (rng.uniform() < nz) {
    const int step = rng.bernoulli(0.5) ? 1 : -1;
    r.conspicuity = reflect(truth.conspicuity + step, static_cast<int>(kConspicuityClasses));
  }
  return r;
}

Cohort generate_cohort(std::size_t n, const StrataConfig& strata, const ReaderProfile& profile,
                       std::uint64_t seed, std::size_t threads) {
  strata.validate();
  profile.validate();
  const std::array<std::array<double, kAgeBins>, 2> age_p{strata.age_given(false),
                                                          strata.age_given(true)};
  const std::array<std::array<double, kDensityBins>, 2> dens_p{strata.density_given(false),
                                                               strata.density_given(true)};
  const std::array<std::array<double, kSignClasses>, 2> sign_p{strata.sign_given(false),
                                                               strata.sign_given(true)};
  const std::array<double, 2> fh_p{strata.family_history_given(false),
                                   strata.family_history_given(true)};

  Cohort cohort(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t ps = derive_seed(seed, i);
    Rng rng(ps);
    PatientRecord& rec = cohort[i];
    rec.id = static_cast<std::int64_t>(i);
    const int outcome = rng.bernoulli(strata.prevalence) ? 1 : 0;
    const auto ab = rng.categorical(age_p[outcome]);
    rec.age = kAgeEdges[ab] +
              static_cast<int>(rng.index(static_cast<std::uint64_t>(kAgeEdges[ab + 1] - kAgeEdges[ab])));
    const auto db = rng.categorical(dens_p[outcome]);
    const double d = rng.uniform(kDensityEdges[db], kDensityEdges[db + 1]);
    const auto sign = static_cast<Sign>(rng.categorical(sign_p[outcome]));
    const int consp =
        sign == Sign::kNone ? 0 : static_cast<int>(rng.categorical(strata.conspicuity));
    rec.family_history = rng.bernoulli(fh_p[outcome]);
    rec.recall = static_cast<RecallType>(rng.categorical(strata.recall));
    const bool overlap = outcome == 0 && rng.bernoulli(strata.overlap_probability);
    const int overlap_side = rng.bernoulli(0.5) ? 1 : 0;
    const double spread = outcome == 1 ? strata.spread_malignant : strata.spread_benign;
    for (std::size_t v = 0; v < kViewCount; ++v) {
      const double dv = std::clamp(d + spread * rng.normal(), 0.0, 100.0);
      rec.density[v] = std::round(dv * 100.0) / 100.0;
    }
    rec.outcome = outcome;

    const int side = rec.lesion_side();
    for (View v : kAllViews) {
      const auto vi = static_cast<std::size_t>(v);
      PhantomSpec spec;
      spec.density = rec.density[vi];
      spec.sign = view_side(v) == side ? sign : Sign::kNone;
      spec.conspicuity = consp;
      spec.malignant = outcome == 1;
      spec.overlap = overlap && view_side(v) == overlap_side;
      spec.mirrored = view_side(v) == 1;
      spec.age = rec.age;
      spec.seed = derive_seed(ps, 16 + vi);
      rec.views[vi] = generate_phantom(spec).image;
      rec.image_paths[vi] = "images/" + std::to_string(rec.id) + "_" +
                            std::string(view_name(v)) + ".pgm";
    }

    Findings truth;
    truth.sign = sign;
    truth.conspicuity = consp;
    truth.outcome = outcome;
    truth.suspicion = suspicion_rule(sign, consp, outcome);
    truth.density_bin = density_bin(d);
    truth.family_history = rec.family_history;
    const auto read = simulate_radiologist(truth, profile, derive_seed(ps, 99));
    rec.rad_diagnosis = read.diagnosis;
    rec.sign = read.sign;
    rec.suspicion = read.suspicion;
    rec.conspicuity = read.conspicuity;
  });
  return cohort;
}

void SplitSpec::validate() const {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) fail(ErrorKind::kConfig, "split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::kConfig, "split fractions must sum to 1");
}

Partition partition(std::size_t n, const SplitSpec& split) {
  split.validate();
  if (n <= split.holdout + 4) fail("n too small for the requested split");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(split.seed, 0x5B11));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);

  const std::size_t rest = n - split.holdout;
  std::array<std::size_t, 4> sizes{};
  std::size_t assigned = 0;
  for (std::size_t k = 1; k < 4; ++k) {
    sizes[k] = static_cast<std::size_t>(std::floor(split.fractions[k] * static_cast<double>(rest)));
    assigned += sizes[k];
  }
  sizes[0] = rest - assigned;
  for (std::size_t s : sizes) {
    if (s == 0) fail("n too small for the requested split");
  }

  Partition p;
  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> part(perm.begin() + static_cast<long>(begin),
                                  perm.begin() + static_cast<long>(begin + count));
    std::sort(part.begin(), part.end());
    return part;
  };
  std::size_t at = 0;
  p.test = take(at, split.holdout);
  at += split.holdout;
  p.stage1 = take(at, sizes[0]);
  at += sizes[0];
  p.stage2 = take(at, sizes[1]);
  at += sizes[1];
  p.stage3 = take(at, sizes[2]);
  at += sizes[2];
  p.validation = take(at, sizes[3]);
  return p;
}

namespace {

constexpr std::array<const char*, 17> kColumns{
    "id",          "age",        "family_history", "recall_type",   "density_mlo_r",
    "density_mlo_l", "density_cc_r", "density_cc_l", "sign",          "suspicion",
    "conspicuity", "outcome",    "rad_diagnosis",  "img_mlo_r",     "img_mlo_l",
    "img_cc_r",    "img_cc_l"};

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* kPartNames[] = {"test", "stage1", "stage2", "stage3", "validation"};

}  // namespace

void save_cohort_csv(const std::filesystem::path& path, const Cohort& cohort) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  for (std::size_t c = 0; c < kColumns.size(); ++c) os << (c ? "," : "") << kColumns[c];
  os << '\n';
  for (const auto& r : cohort) {
    os << r.id << ',' << r.age << ',' << (r.family_history ? 1 : 0) << ','
       << recall_name(r.recall);
    for (double d : r.density) os << ',' << fmt6(d);
    os << ',' << sign_name(r.sign) << ',' << r.suspicion << ',' << r.conspicuity << ','
       << r.outcome << ',' << r.rad_diagnosis;
    for (const auto& p : r.image_paths) os << ',' << p;
    os << '\n';
  }
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

void save_cohort(const std::filesystem::path& path, const Cohort& cohort) {
  const auto dir = path.parent_path();
  for (const auto& r : cohort) {
    for (std::size_t v = 0; v < kViewCount; ++v) {
      if (r.image_paths[v].empty()) fail("patient " + std::to_string(r.id) + " has no image path");
      const auto target = dir / r.image_paths[v];
      std::filesystem::create_directories(target.parent_path());
      image::write_pgm(target, r.views[v]);
    }
  }
  save_cohort_csv(path, cohort);
}

Cohort load_cohort(const std::filesystem::path& path, bool with_images) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kMissingArtifact, "cannot open cohort file " + path.string());
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kParse, path.string() + ": empty cohort file");
  const auto header = csv::split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::array<std::size_t, kColumns.size()> idx{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = col.find(kColumns[c]);
    if (it == col.end()) fail(ErrorKind::kParse, std::string("missing column '") + kColumns[c] + "'");
    idx[c] = it->second;
  }

  Cohort cohort;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != header.size()) {
      fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(f.size()));
    }
    auto field = [&](std::size_t c) -> const std::string& { return f[idx[c]]; };
    PatientRecord r;
    try {
      r.id = csv::parse<std::int64_t>(field(0), line_no, kColumns[0]);
      r.age = csv::parse<int>(field(1), line_no, kColumns[1]);
      const int fh = csv::parse<int>(field(2), line_no, kColumns[2]);
      r.recall = parse_recall(field(3));
      for (std::size_t v = 0; v < kViewCount; ++v) {
        r.density[v] = csv::parse<double>(field(4 + v), line_no, kColumns[4 + v]);
      }
      r.sign = parse_sign(field(8));
      r.suspicion = csv::parse<int>(field(9), line_no, kColumns[9]);
      r.conspicuity = csv::parse<int>(field(10), line_no, kColumns[10]);
      r.outcome = csv::parse<int>(field(11), line_no, kColumns[11]);
      r.rad_diagnosis = csv::parse<int>(field(12), line_no, kColumns[12]);
      for (std::size_t v = 0; v < kViewCount; ++v) r.image_paths[v] = field(13 + v);
      if (fh != 0 && fh != 1) fail(ErrorKind::kParse, "family_history must be 0 or 1");
      r.family_history = fh == 1;
      if (r.age < 0) fail(ErrorKind::kParse, "age must be non-negative");
      for (double d : r.density) {
        if (!(d >= 0.0 && d <= 100.0)) fail(ErrorKind::kParse, "density must be in [0, 100]");
      }
      if (r.suspicion < 0 || r.suspicion >= static_cast<int>(kSuspicionClasses)) {
        fail(ErrorKind::kParse, "suspicion out of range");
      }
      if (r.conspicuity < 0 || r.conspicuity >= static_cast<int>(kConspicuityClasses)) {
        fail(ErrorKind::kParse, "conspicuity out of range");
      }
      if ((r.outcome != 0 && r.outcome != 1) || (r.rad_diagnosis != 0 && r.rad_diagnosis != 1)) {
        fail(ErrorKind::kParse, "outcome and rad_diagnosis must be 0 or 1");
      }
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + msg);
    }
    if (with_images) {
      for (std::size_t v = 0; v < kViewCount; ++v) {
        r.views[v] = image::read_pgm(path.parent_path() / r.image_paths[v]);
        if (r.views[v].width != W || r.views[v].height != H) {
          fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": image " +
                                      r.image_paths[v] + " is not 40x52");
        }
      }
    }
    cohort.push_back(std::move(r));
  }
  return cohort;
}

void save_partition(const std::filesystem::path& path, const Cohort& cohort,
                    const Partition& parts) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  os << "id,part\n";
  const std::array<const std::vector<std::size_t>*, 5> all{
      &parts.test, &parts.stage1, &parts.stage2, &parts.stage3, &parts.validation};
  for (std::size_t k = 0; k < all.size(); ++k) {
    for (std::size_t i : *all[k]) {
      if (i >= cohort.size()) fail("partition index out of range");
      os << cohort[i].id << ',' << kPartNames[k] << '\n';
    }
  }
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

Partition load_partition(const std::filesystem::path& path, const Cohort& cohort) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kMissingArtifact, "cannot open partition file " + path.string());
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < cohort.size(); ++i) index[cohort[i].id] = i;
  Partition p;
  const std::array<std::vector<std::size_t>*, 5> all{&p.test, &p.stage1, &p.stage2, &p.stage3,
                                                     &p.validation};
  std::string line;
  std::getline(is, line);
  if (line != "id,part") fail(ErrorKind::kParse, path.string() + ": bad partition header");
  std::size_t line_no = 1;
  std::vector<bool> seen(cohort.size(), false);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 2) fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected 2 fields");
    const auto id = csv::parse<std::int64_t>(f[0], line_no, "id");
    const auto it = index.find(id);
    if (it == index.end()) fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": unknown id");
    std::size_t k = 0;
    while (k < all.size() && f[1] != kPartNames[k]) ++k;
    if (k == all.size()) fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": unknown part");
    if (seen[it->second]) fail(ErrorKind::kDataLeakage, "patient " + f[0] + " assigned twice");
    seen[it->second] = true;
    all[k]->push_back(it->second);
  }
  for (auto* v : all) std::sort(v->begin(), v->end());
  return p;
}

}  // namespace mammo::cohort

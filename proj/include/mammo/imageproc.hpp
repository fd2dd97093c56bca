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
#include <span>
#include <vector>

// Grayscale image preprocessing and augmentation: geometric transforms,
// CLAHE with randomized grid and clip parameters, Gaussian noise,
// standardization and Lanczos down-scaling. Intensities are reals; the
// phantom and file formats use [0, 1].
namespace mammo::image {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major, height rows of width values

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::size_t size() const noexcept { return pixels.size(); }
  double mean() const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct AugmentSpec {
  bool allow_hflip = true;
  bool allow_vflip = true;
  double max_rotation = 20.0;  // degrees
  double max_shear = 0.20;     // fraction
  double max_zoom = 0.20;      // fraction
  double max_shift = 0.20;     // fraction of width / height
  bool clahe_enabled = true;
  int clahe_grid = 4;          // nominal grid size k
  double clahe_clip = 2.0;     // nominal clip limit l
  double noise_sigma = 0.01;

  void validate() const;
  // Every transform off; full_pipeline then reduces to standardize().
  static AugmentSpec disabled() noexcept;
};

struct GeometryDraw {
  bool hflip = false;
  bool vflip = false;
  double rotation = 0.0;  // degrees
  double shear = 0.0;
  double zoom_x = 1.0;
  double zoom_y = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
};

// Independent uniform draw per enabled transform.
GeometryDraw draw_geometry(const AugmentSpec& spec, std::size_t width,
                           std::size_t height, std::uint64_t seed);
GrayImage apply_geometry(const GrayImage& img, const GeometryDraw& draw);
GrayImage augment_geometry(const GrayImage& img, const AugmentSpec& spec,
                           std::uint64_t seed);

GrayImage hflip(const GrayImage& img);
GrayImage vflip(const GrayImage& img);

struct ClaheParams {
  int grid = 2;
  double clip = 1.0;
};

inline constexpr double kMinClipLimit = 0.01;

// g = round(k + a), a ~ U(-log2 k, log2 k), clamped to >= 2;
// c = l + a', a' ~ U(-|log2 l|, |log2 l|), clamped to >= kMinClipLimit.
ClaheParams clahe_params(int k, double l, std::uint64_t seed);
ClaheParams clahe_params_from_draws(int k, double l, double grid_offset,
                                    double clip_offset);

inline constexpr std::size_t kHistogramBins = 256;

// Caps every bin at `ceiling` and returns the total mass removed.
double clip_histogram(std::span<double> histogram, double ceiling);

// Tile-wise equalization with clip-and-redistribute and bilinear blending of
// the tile mappings. Input is read as [0, 1]; output lies in [0, 1].
GrayImage clahe(const GrayImage& img, int grid, double clip);

GrayImage gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed);

// Zero mean, unit (population) standard deviation; constant images map to
// all zeros.
GrayImage standardize(const GrayImage& img);
// Dataset-level variant with precomputed statistics.
GrayImage standardize(const GrayImage& img, double mean, double stddev);

// Lanczos-3 resampling by an integer factor that divides both dimensions.
GrayImage lanczos_downscale(const GrayImage& img, std::size_t factor);

// geometry -> CLAHE -> noise -> standardize, each stage seeded from `seed`.
GrayImage full_pipeline(const GrayImage& img, const AugmentSpec& spec,
                        std::uint64_t seed);

// Deterministic counterpart of full_pipeline for inference: CLAHE at the
// nominal (k, l) when enabled, then standardize.
GrayImage preprocess(const GrayImage& img, const AugmentSpec& spec);

// Shannon entropy (bits) of the 256-bin histogram of [0, 1]-clamped values.
double shannon_entropy(const GrayImage& img);

// 8-bit binary PGM (P5). Values are clamped to [0, 1] and rounded to k/255.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);
// Rounds every pixel to the nearest representable 8-bit level.
GrayImage quantize8(const GrayImage& img);

}  // namespace mammo::image

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

#include "mammo/imageproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "mammo/error.hpp"
#include "mammo/random.hpp"

namespace mammo::image {
namespace {

std::size_t bin_of(double v) noexcept {
  const double c = std::clamp(v, 0.0, 1.0);
  return std::min<std::size_t>(kHistogramBins - 1,
                               static_cast<std::size_t>(c * kHistogramBins));
}

double sample_bilinear(const GrayImage& img, double x, double y, double fill) {
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  if (!(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y)) return fill;
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  if (fx == 0.0 && fy == 0.0) return img.at(x0, y0);
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

double lanczos3(double t) noexcept {
  t = std::abs(t);
  if (t < 1e-12) return 1.0;
  if (t >= 3.0) return 0.0;
  const double pt = std::numbers::pi * t;
  return 3.0 * std::sin(pt) * std::sin(pt / 3.0) / (pt * pt);
}

// Resamples one axis of length n_in down to n_in / factor.
std::vector<double> lanczos_weights_row(std::size_t n_in, std::size_t factor,
                                        std::size_t out_index,
                                        std::vector<std::size_t>& taps) {
  const double f = static_cast<double>(factor);
  const double center = (static_cast<double>(out_index) + 0.5) * f - 0.5;
  const double radius = 3.0 * f;
  const auto lo = static_cast<long>(std::ceil(center - radius));
  const auto hi = static_cast<long>(std::floor(center + radius));
  std::vector<double> weights;
  taps.clear();
  double sum = 0.0;
  for (long j = lo; j <= hi; ++j) {
    const double w = lanczos3((static_cast<double>(j) - center) / f);
    if (w == 0.0) continue;
    const long clamped = std::clamp<long>(j, 0, static_cast<long>(n_in) - 1);
    taps.push_back(static_cast<std::size_t>(clamped));
    weights.push_back(w);
    sum += w;
  }
  for (double& w : weights) w /= sum;
  return weights;
}

}  // namespace

double GrayImage::mean() const {
  if (pixels.empty()) return 0.0;
  double sum = 0.0;
  for (double v : pixels) sum += v;
  return sum / static_cast<double>(pixels.size());
}

void AugmentSpec::validate() const {
  if (max_rotation < 0.0 || max_shear < 0.0 || max_zoom < 0.0 || max_shift < 0.0) {
    fail("augmentation maxima must be >= 0");
  }
  if (max_zoom >= 1.0) fail("max_zoom must be < 1");
  if (clahe_grid < 2) fail("CLAHE nominal grid must be >= 2");
  if (!(clahe_clip > 0.0)) fail("CLAHE nominal clip must be > 0");
  if (!(noise_sigma >= 0.0)) fail("noise sigma must be >= 0");
}

AugmentSpec AugmentSpec::disabled() noexcept {
  AugmentSpec s;
  s.allow_hflip = false;
  s.allow_vflip = false;
  s.max_rotation = 0.0;
  s.max_shear = 0.0;
  s.max_zoom = 0.0;
  s.max_shift = 0.0;
  s.clahe_enabled = false;
  s.noise_sigma = 0.0;
  return s;
}

GeometryDraw draw_geometry(const AugmentSpec& spec, std::size_t width,
                           std::size_t height, std::uint64_t seed) {
  Rng rng(seed);
  GeometryDraw d;
  // Fixed draw order; disabled transforms still consume their draw so that
  // enabling one transform does not reshuffle the others.
  const double u_h = rng.uniform();
  const double u_v = rng.uniform();
  const double u_rot = rng.uniform(-1.0, 1.0);
  const double u_shear = rng.uniform(-1.0, 1.0);
  const double u_zx = rng.uniform(-1.0, 1.0);
  const double u_zy = rng.uniform(-1.0, 1.0);
  const double u_sx = rng.uniform(-1.0, 1.0);
  const double u_sy = rng.uniform(-1.0, 1.0);
  d.hflip = spec.allow_hflip && u_h < 0.5;
  d.vflip = spec.allow_vflip && u_v < 0.5;
  d.rotation = spec.max_rotation * u_rot;
  d.shear = spec.max_shear * u_shear;
  d.zoom_x = 1.0 + spec.max_zoom * u_zx;
  d.zoom_y = 1.0 + spec.max_zoom * u_zy;
  d.shift_x = spec.max_shift * u_sx * static_cast<double>(width);
  d.shift_y = spec.max_shift * u_sy * static_cast<double>(height);
  return d;
}

// Forward map on centred coordinates: p' = Z R S p + t, then flips.
// Output pixels pull from the input through the inverse map.
GrayImage apply_geometry(const GrayImage& img, const GeometryDraw& d) {
  if (img.size() == 0) fail("empty image");
  const double fill = img.mean();
  const double theta = d.rotation * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // A = Z * R * S with S = [[1, sh], [0, 1]].
  const double a00 = d.zoom_x * c;
  const double a01 = d.zoom_x * (c * d.shear - s);
  const double a10 = d.zoom_y * s;
  const double a11 = d.zoom_y * (s * d.shear + c);
  const double det = a00 * a11 - a01 * a10;
  if (std::abs(det) < 1e-12) fail("degenerate geometric transform");
  const double i00 = a11 / det;
  const double i01 = -a01 / det;
  const double i10 = -a10 / det;
  const double i11 = a00 / det;
  const double cx = (static_cast<double>(img.width) - 1.0) * 0.5;
  const double cy = (static_cast<double>(img.height) - 1.0) * 0.5;

  GrayImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      double ux = static_cast<double>(d.hflip ? img.width - 1 - x : x);
      double uy = static_cast<double>(d.vflip ? img.height - 1 - y : y);
      ux -= cx + d.shift_x;
      uy -= cy + d.shift_y;
      const double sx = i00 * ux + i01 * uy + cx;
      const double sy = i10 * ux + i11 * uy + cy;
      out.at(x, y) = sample_bilinear(img, sx, sy, fill);
    }
  }
  return out;
}

GrayImage augment_geometry(const GrayImage& img, const AugmentSpec& spec,
                           std::uint64_t seed) {
  return apply_geometry(img, draw_geometry(spec, img.width, img.height, seed));
}

GrayImage hflip(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      out.at(x, y) = img.at(img.width - 1 - x, y);
    }
  }
  return out;
}

GrayImage vflip(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      out.at(x, y) = img.at(x, img.height - 1 - y);
    }
  }
  return out;
}

ClaheParams clahe_params_from_draws(int k, double l, double grid_offset,
                                    double clip_offset) {
  if (k < 2) fail("CLAHE nominal grid must be >= 2");
  if (!(l > 0.0)) fail("CLAHE nominal clip must be > 0");
  ClaheParams p;
  p.grid = std::max(2, static_cast<int>(std::lround(static_cast<double>(k) + grid_offset)));
  p.clip = std::max(kMinClipLimit, l + clip_offset);
  return p;
}

ClaheParams clahe_params(int k, double l, std::uint64_t seed) {
  if (k < 2) fail("CLAHE nominal grid must be >= 2");
  if (!(l > 0.0)) fail("CLAHE nominal clip must be > 0");
  Rng rng(seed);
  const double grid_span = std::log2(static_cast<double>(k));
  const double clip_span = std::abs(std::log2(l));
  const double a = rng.uniform(-grid_span, grid_span);
  const double a_clip = rng.uniform(-clip_span, clip_span);
  return clahe_params_from_draws(k, l, a, a_clip);
}

double clip_histogram(std::span<double> histogram, double ceiling) {
  double excess = 0.0;
  for (double& h : histogram) {
    if (h > ceiling) {
      excess += h - ceiling;
      h = ceiling;
    }
  }
  return excess;
}

GrayImage clahe(const GrayImage& img, int grid, double clip) {
  if (grid < 2) fail("CLAHE grid must be >= 2");
  if (!(clip > 0.0)) fail("CLAHE clip must be > 0");
  const auto g = static_cast<std::size_t>(grid);
  if (img.width < g || img.height < g) fail("image smaller than CLAHE grid");

  std::vector<std::size_t> xe(g + 1), ye(g + 1);
  for (std::size_t i = 0; i <= g; ++i) {
    xe[i] = i * img.width / g;
    ye[i] = i * img.height / g;
  }

  // One lookup table per tile, mapping a bin to its clipped CDF value.
  std::vector<double> luts(g * g * kHistogramBins);
  std::vector<double> hist(kHistogramBins);
  for (std::size_t ty = 0; ty < g; ++ty) {
    for (std::size_t tx = 0; tx < g; ++tx) {
      std::fill(hist.begin(), hist.end(), 0.0);
      for (std::size_t y = ye[ty]; y < ye[ty + 1]; ++y) {
        for (std::size_t x = xe[tx]; x < xe[tx + 1]; ++x) hist[bin_of(img.at(x, y))] += 1.0;
      }
      const double count =
          static_cast<double>((ye[ty + 1] - ye[ty]) * (xe[tx + 1] - xe[tx]));
      const double ceiling = clip * count / static_cast<double>(kHistogramBins);
      const double excess = clip_histogram(hist, ceiling);
      const double share = excess / static_cast<double>(kHistogramBins);
      double* lut = luts.data() + (ty * g + tx) * kHistogramBins;
      double cdf = 0.0;
      for (std::size_t b = 0; b < kHistogramBins; ++b) {
        cdf += hist[b] + share;
        lut[b] = std::min(1.0, cdf / count);
      }
    }
  }

  std::vector<double> cx(g), cy(g);
  for (std::size_t i = 0; i < g; ++i) {
    cx[i] = 0.5 * static_cast<double>(xe[i] + xe[i + 1] - 1);
    cy[i] = 0.5 * static_cast<double>(ye[i] + ye[i + 1] - 1);
  }
  // Neighbouring tile pair and blend weight along one axis.
  auto locate = [g](const std::vector<double>& centers, double p, std::size_t& i0,
                    std::size_t& i1, double& t) {
    if (p <= centers.front()) {
      i0 = i1 = 0;
      t = 0.0;
      return;
    }
    if (p >= centers.back()) {
      i0 = i1 = g - 1;
      t = 0.0;
      return;
    }
    std::size_t i = 0;
    while (i + 1 < g && centers[i + 1] < p) ++i;
    i0 = i;
    i1 = i + 1;
    t = (p - centers[i0]) / (centers[i1] - centers[i0]);
  };

  GrayImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    std::size_t y0, y1;
    double ty;
    locate(cy, static_cast<double>(y), y0, y1, ty);
    for (std::size_t x = 0; x < img.width; ++x) {
      std::size_t x0, x1;
      double tx;
      locate(cx, static_cast<double>(x), x0, x1, tx);
      const std::size_t b = bin_of(img.at(x, y));
      auto lut = [&](std::size_t gy, std::size_t gx) {
        return luts[(gy * g + gx) * kHistogramBins + b];
      };
      const double top = lut(y0, x0) * (1.0 - tx) + lut(y0, x1) * tx;
      const double bottom = lut(y1, x0) * (1.0 - tx) + lut(y1, x1) * tx;
      out.at(x, y) = std::clamp(top * (1.0 - ty) + bottom * ty, 0.0, 1.0);
    }
  }
  return out;
}

GrayImage gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) fail("noise sigma must be >= 0");
  GrayImage out = img;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.pixels) v += sigma * rng.normal();
  return out;
}

GrayImage standardize(const GrayImage& img, double mean, double stddev) {
  GrayImage out(img.width, img.height);
  if (!(stddev > 0.0)) return out;
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.pixels[i] = (img.pixels[i] - mean) / stddev;
  }
  return out;
}

GrayImage standardize(const GrayImage& img) {
  if (img.size() == 0) return img;
  const double mean = img.mean();
  double ss = 0.0;
  for (double v : img.pixels) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(img.size()));
  // Relative threshold: a constant image carries only rounding noise.
  if (stddev <= 1e-12 * std::max(1.0, std::abs(mean))) {
    return GrayImage(img.width, img.height, 0.0);
  }
  return standardize(img, mean, stddev);
}

GrayImage lanczos_downscale(const GrayImage& img, std::size_t factor) {
  if (factor == 0) fail("downscale factor must be positive");
  if (img.width % factor != 0 || img.height % factor != 0) {
    fail("image dimensions not divisible by downscale factor");
  }
  const std::size_t ow = img.width / factor;
  const std::size_t oh = img.height / factor;
  std::vector<std::size_t> taps;

  GrayImage horizontal(ow, img.height);
  for (std::size_t ox = 0; ox < ow; ++ox) {
    const auto w = lanczos_weights_row(img.width, factor, ox, taps);
    for (std::size_t y = 0; y < img.height; ++y) {
      double acc = 0.0;
      for (std::size_t t = 0; t < taps.size(); ++t) acc += w[t] * img.at(taps[t], y);
      horizontal.at(ox, y) = acc;
    }
  }
  GrayImage out(ow, oh);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    const auto w = lanczos_weights_row(img.height, factor, oy, taps);
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < taps.size(); ++t) acc += w[t] * horizontal.at(x, taps[t]);
      out.at(x, oy) = acc;
    }
  }
  return out;
}

GrayImage full_pipeline(const GrayImage& img, const AugmentSpec& spec,
                        std::uint64_t seed) {
  spec.validate();
  GrayImage out = augment_geometry(img, spec, derive_seed(seed, 1));
  if (spec.clahe_enabled) {
    const ClaheParams p =
        clahe_params(spec.clahe_grid, spec.clahe_clip, derive_seed(seed, 2));
    out = clahe(out, p.grid, p.clip);
  }
  out = gaussian_noise(out, spec.noise_sigma, derive_seed(seed, 3));
  return standardize(out);
}

GrayImage preprocess(const GrayImage& img, const AugmentSpec& spec) {
  spec.validate();
  if (!spec.clahe_enabled) return standardize(img);
  return standardize(clahe(img, spec.clahe_grid, spec.clahe_clip));
}

double shannon_entropy(const GrayImage& img) {
  if (img.size() == 0) return 0.0;
  std::vector<double> hist(kHistogramBins, 0.0);
  for (double v : img.pixels) hist[bin_of(v)] += 1.0;
  const double n = static_cast<double>(img.size());
  double h = 0.0;
  for (double c : hist) {
    if (c > 0.0) h -= (c / n) * std::log2(c / n);
  }
  return h;
}

GrayImage quantize8(const GrayImage& img) {
  GrayImage out = img;
  for (double& v : out.pixels) {
    v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write " + path.string());
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(
        std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::kIo, "failed writing " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kMissingArtifact, "cannot open image " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P5") fail(ErrorKind::kParse, path.string() + ": not a binary PGM");
  // Header tokens may be separated by comments.
  auto next_int = [&]() -> long {
    for (;;) {
      is >> std::ws;
      if (is.peek() == '#') {
        std::string skip;
        std::getline(is, skip);
        continue;
      }
      long v = -1;
      is >> v;
      if (!is) fail(ErrorKind::kParse, path.string() + ": malformed PGM header");
      return v;
    }
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255) {
    fail(ErrorKind::kParse, path.string() + ": unsupported PGM geometry or depth");
  }
  is.get();  // single whitespace before raster
  GrayImage img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  std::vector<unsigned char> bytes(img.size());
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) {
    fail(ErrorKind::kParse, path.string() + ": truncated PGM raster");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
  return img;
}

}  // namespace mammo::image

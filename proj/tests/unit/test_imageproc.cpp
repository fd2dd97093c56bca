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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "mammo/error.hpp"
#include "mammo/imageproc.hpp"
#include "mammo/random.hpp"

namespace mammo::image {
namespace {

namespace fs = std::filesystem;

GrayImage ramp(std::size_t w, std::size_t h) {
  GrayImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(x, y) = 0.1 + 0.8 * static_cast<double>(x + 2 * y) / static_cast<double>(w + 2 * h);
    }
  }
  return img;
}

GrayImage low_contrast_fixture() {
  return read_pgm(fs::path(MAMMO_FIXTURE_DIR) / "low_contrast.pgm");
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mammo_imageproc_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Clahe, EntropyDoesNotDecreaseOnLowContrastFixture) {
  const GrayImage img = low_contrast_fixture();
  ASSERT_EQ(img.width, 64u);
  const double before = shannon_entropy(img);
  for (int grid : {2, 4, 8}) {
    for (double clip : {1.0, 2.0, 4.0}) {
      const GrayImage out = clahe(img, grid, clip);
      EXPECT_GE(shannon_entropy(out), before) << "grid " << grid << " clip " << clip;
      for (double v : out.pixels) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(Clahe, ConstantImageStaysConstant) {
  const GrayImage out = clahe(GrayImage(16, 16, 0.3), 4, 2.0);
  for (double v : out.pixels) EXPECT_DOUBLE_EQ(v, out.pixels[0]);
}

TEST(Clahe, RejectsBadArguments) {
  EXPECT_THROW(clahe(ramp(8, 8), 1, 2.0), Error);
  EXPECT_THROW(clahe(ramp(8, 8), 4, 0.0), Error);
  EXPECT_THROW(clahe(ramp(3, 3), 4, 2.0), Error);
}

TEST(Clahe, ClipHistogramConservesMass) {
  std::vector<double> h{5, 1, 9, 0, 3};
  const double removed = clip_histogram(h, 4.0);
  EXPECT_DOUBLE_EQ(removed, 6.0);
  EXPECT_EQ(h, (std::vector<double>{4, 1, 4, 0, 3}));
}

TEST(ClaheParams, GridStaysInRangeForK8) {
  int lo = 100, hi = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const ClaheParams p = clahe_params(8, 2.0, s);
    EXPECT_GE(p.grid, 5);
    EXPECT_LE(p.grid, 11);
    EXPECT_GE(p.clip, 1.0);
    EXPECT_LE(p.clip, 3.0);
    lo = std::min(lo, p.grid);
    hi = std::max(hi, p.grid);
  }
  EXPECT_EQ(lo, 5);
  EXPECT_EQ(hi, 11);
}

TEST(ClaheParams, ClampsAtTheFloor) {
  EXPECT_EQ(clahe_params_from_draws(2, 1.0, -1.0, 0.0).grid, 2);
  EXPECT_DOUBLE_EQ(clahe_params_from_draws(4, 0.5, 0.0, -1.0).clip, kMinClipLimit);
  EXPECT_THROW(clahe_params(1, 2.0, 0), Error);
  EXPECT_THROW(clahe_params(4, 0.0, 0), Error);
}

TEST(Noise, EmpiricalSigmaWithinFivePercent) {
  const GrayImage base(320, 416, 0.5);
  const GrayImage noisy = gaussian_noise(base, 0.01, 42);
  double ss = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double d = noisy.pixels[i] - base.pixels[i];
    sum += d;
    ss += d * d;
  }
  const double n = static_cast<double>(base.size());
  const double sigma = std::sqrt(ss / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sigma, 0.01, 0.0005);
  EXPECT_EQ(gaussian_noise(base, 0.01, 42), noisy);
  EXPECT_EQ(gaussian_noise(base, 0.0, 42), base);
}

TEST(Lanczos, DownscalesBy8KeepingAspect) {
  const GrayImage big = ramp(320, 416);
  const GrayImage small = lanczos_downscale(big, 8);
  EXPECT_EQ(small.width, 40u);
  EXPECT_EQ(small.height, 52u);
  EXPECT_DOUBLE_EQ(static_cast<double>(small.width) / small.height, 320.0 / 416.0);
  EXPECT_NEAR(small.mean(), big.mean(), 0.01);
  EXPECT_THROW(lanczos_downscale(big, 3), Error);
  EXPECT_THROW(lanczos_downscale(big, 0), Error);
}

TEST(Lanczos, ConstantIsPreserved) {
  const GrayImage small = lanczos_downscale(GrayImage(64, 32, 0.25), 4);
  for (double v : small.pixels) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Geometry, FlipsAreInvolutions) {
  const GrayImage img = ramp(7, 5);
  EXPECT_EQ(hflip(hflip(img)), img);
  EXPECT_EQ(vflip(vflip(img)), img);
  EXPECT_EQ(hflip(img).at(0, 0), img.at(6, 0));
  EXPECT_EQ(vflip(img).at(0, 0), img.at(0, 4));
}

TEST(Geometry, DrawsRespectTheirBounds) {
  AugmentSpec spec;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const GeometryDraw d = draw_geometry(spec, 40, 52, s);
    EXPECT_LE(std::abs(d.rotation), spec.max_rotation);
    EXPECT_LE(std::abs(d.shear), spec.max_shear);
    EXPECT_LE(std::abs(d.zoom_x - 1.0), spec.max_zoom);
    EXPECT_LE(std::abs(d.zoom_y - 1.0), spec.max_zoom);
    EXPECT_LE(std::abs(d.shift_x), spec.max_shift * 40);
    EXPECT_LE(std::abs(d.shift_y), spec.max_shift * 52);
  }
  const GeometryDraw none = draw_geometry(AugmentSpec::disabled(), 40, 52, 9);
  EXPECT_FALSE(none.hflip || none.vflip);
  EXPECT_EQ(none.rotation, 0.0);
  EXPECT_EQ(none.zoom_x, 1.0);
}

TEST(Geometry, IdentityDrawIsIdentity) {
  const GrayImage img = ramp(9, 6);
  const GrayImage out = apply_geometry(img, GeometryDraw{});
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out.pixels[i], img.pixels[i], 1e-12);
}

TEST(Standardize, ZeroMeanUnitVariance) {
  const GrayImage out = standardize(ramp(20, 10));
  double m = 0.0, v = 0.0;
  for (double x : out.pixels) m += x;
  m /= static_cast<double>(out.size());
  for (double x : out.pixels) v += (x - m) * (x - m);
  v /= static_cast<double>(out.size());
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(v, 1.0, 1e-12);
  for (double x : standardize(GrayImage(4, 4, 0.7)).pixels) EXPECT_EQ(x, 0.0);
}

TEST(Pipeline, DisabledSpecReducesToStandardize) {
  const GrayImage img = ramp(40, 52);
  EXPECT_EQ(full_pipeline(img, AugmentSpec::disabled(), 5), standardize(img));
  EXPECT_EQ(preprocess(img, AugmentSpec::disabled()), standardize(img));
}

TEST(Pipeline, SeededAndDeterministic) {
  const GrayImage img = low_contrast_fixture();
  const AugmentSpec spec;
  EXPECT_EQ(full_pipeline(img, spec, 3), full_pipeline(img, spec, 3));
  EXPECT_FALSE(full_pipeline(img, spec, 3) == full_pipeline(img, spec, 4));
}

TEST(Spec, Validation) {
  AugmentSpec s;
  EXPECT_NO_THROW(s.validate());
  s.max_zoom = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = AugmentSpec{};
  s.noise_sigma = -0.1;
  EXPECT_THROW(s.validate(), Error);
  s = AugmentSpec{};
  s.clahe_grid = 1;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Pgm, RoundTripOfQuantizedImage) {
  const GrayImage img = quantize8(ramp(13, 11));
  const fs::path p = scratch("round_trip.pgm");
  write_pgm(p, img);
  EXPECT_EQ(read_pgm(p), img);
  EXPECT_EQ(quantize8(img), img);
}

TEST(Pgm, ErrorsCarryKinds) {
  try {
    read_pgm(scratch("does_not_exist.pgm"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
  }
  const fs::path bad = scratch("bad.pgm");
  {
    std::ofstream os(bad, std::ios::binary);
    os << "P2\n2 2\n255\n1 2 3 4\n";
  }
  try {
    read_pgm(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
  const fs::path truncated = scratch("truncated.pgm");
  {
    std::ofstream os(truncated, std::ios::binary);
    os << "P5\n4 4\n255\n" << std::string(5, 'a');
  }
  EXPECT_THROW(read_pgm(truncated), Error);
}

}  // namespace
}  // namespace mammo::image

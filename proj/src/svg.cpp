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

#include "mammo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mammo/error.hpp"

namespace mammo::svg {
namespace {

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(h) +
         "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string hex(int r, int g, int b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

int byte(double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

// Black through red and yellow to white.
std::string heat_colour(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return hex(byte(3.0 * t), byte(3.0 * t - 1.0), byte(3.0 * t - 2.0));
}

}  // namespace

std::string operating_curve(std::span<const triage::OperatingPoint> points,
                            const CurveReference& ref) {
  if (points.empty()) fail("operating curve has no points");
  constexpr int W = 520, H = 400, L = 60, R = 20, T = 30, B = 50;
  constexpr double PW = W - L - R, PH = H - T - B;
  double ymax = 0.0;
  for (const auto& p : points) {
    if (std::isfinite(p.fnr)) ymax = std::max(ymax, p.fnr);
    if (std::isfinite(p.fpr)) ymax = std::max(ymax, p.fpr);
  }
  ymax = std::max({ymax, ref.fnr, ref.fpr, 0.05});
  ymax = std::ceil(ymax * 10.0) / 10.0;
  auto X = [&](double f) { return L + f * PW; };
  auto Y = [&](double v) { return T + PH - v / ymax * PH; };

  std::string s = header(W, H);
  s += "<text x=\"" + f2(W / 2.0) + "\" y=\"18\" text-anchor=\"middle\">Operating curve</text>\n";
  s += "<rect x=\"" + f2(L) + "\" y=\"" + f2(T) + "\" width=\"" + f2(PW) + "\" height=\"" +
       f2(PH) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double f = k / 5.0;
    s += "<line x1=\"" + f2(X(f)) + "\" y1=\"" + f2(T + PH) + "\" x2=\"" + f2(X(f)) + "\" y2=\"" +
         f2(T + PH + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + f2(X(f)) + "\" y=\"" + f2(T + PH + 18) + "\" text-anchor=\"middle\">" +
         f2(f) + "</text>\n";
    const double v = ymax * f;
    s += "<line x1=\"" + f2(L - 5) + "\" y1=\"" + f2(Y(v)) + "\" x2=\"" + f2(L) + "\" y2=\"" +
         f2(Y(v)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + f2(L - 8) + "\" y=\"" + f2(Y(v) + 4) + "\" text-anchor=\"end\">" + f2(v) +
         "</text>\n";
  }
  s += "<text x=\"" + f2(L + PW / 2) + "\" y=\"" + f2(H - 10.0) +
       "\" text-anchor=\"middle\">fraction of patients read by the radiologist</text>\n";
  s += "<text x=\"15\" y=\"" + f2(T + PH / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
       f2(T + PH / 2) + ")\">error rate</text>\n";

  auto series = [&](auto get, const char* colour, const char* name, double ref_value, int row) {
    std::string pts;
    std::string marks;
    for (const auto& p : points) {
      const double v = get(p);
      if (!std::isfinite(v)) continue;
      if (!pts.empty()) pts += ' ';
      pts += f2(X(p.frac_to_radiologist)) + "," + f2(Y(v));
      marks += "<circle cx=\"" + f2(X(p.frac_to_radiologist)) + "\" cy=\"" + f2(Y(v)) +
               "\" r=\"2.5\" fill=\"" + colour + "\"/>\n";
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colour + "\"/>\n" + marks;
    if (ref_value >= 0.0) {
      s += "<line x1=\"" + f2(L) + "\" y1=\"" + f2(Y(ref_value)) + "\" x2=\"" + f2(L + PW) +
           "\" y2=\"" + f2(Y(ref_value)) + "\" stroke=\"" + colour +
           "\" stroke-dasharray=\"4 3\"/>\n";
    }
    const double ly = T + 14.0 + 16.0 * row;
    s += "<line x1=\"" + f2(L + PW - 110) + "\" y1=\"" + f2(ly - 4) + "\" x2=\"" + f2(L + PW - 90) +
         "\" y2=\"" + f2(ly - 4) + "\" stroke=\"" + colour + "\"/>\n";
    s += "<text x=\"" + f2(L + PW - 85) + "\" y=\"" + f2(ly) + "\">" + name + "</text>\n";
  };
  series([](const triage::OperatingPoint& p) { return p.fnr; }, "#c0392b", "FNR", ref.fnr, 0);
  series([](const triage::OperatingPoint& p) { return p.fpr; }, "#2c6fbb", "FPR", ref.fpr, 1);
  if (ref.chosen_frac >= 0.0) {
    s += "<line x1=\"" + f2(X(ref.chosen_frac)) + "\" y1=\"" + f2(T) + "\" x2=\"" +
         f2(X(ref.chosen_frac)) + "\" y2=\"" + f2(T + PH) +
         "\" stroke=\"gray\" stroke-dasharray=\"2 2\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string saliency(const image::GrayImage& img, const image::GrayImage& heat,
                     const std::string& title) {
  if (img.size() == 0 || heat.size() == 0) fail("saliency plot needs an image");
  if (img.width != heat.width || img.height != heat.height) fail("heatmap shape mismatch");
  constexpr int kScale = 6, kGap = 20, kTop = 30;
  const int w = static_cast<int>(img.width), h = static_cast<int>(img.height);
  const int W = 2 * w * kScale + 3 * kGap, H = h * kScale + kTop + kGap;
  double hmax = 0.0;
  for (double v : heat.pixels) hmax = std::max(hmax, v);
  std::string s = header(W, H);
  s += "<text x=\"" + f2(W / 2.0) + "\" y=\"18\" text-anchor=\"middle\">" + escape(title) +
       "</text>\n";
  auto raster = [&](int x0, auto colour) {
    s += "<g shape-rendering=\"crispEdges\">\n";
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        s += "<rect x=\"" + std::to_string(x0 + x * kScale) + "\" y=\"" +
             std::to_string(kTop + y * kScale) + "\" width=\"" + std::to_string(kScale) +
             "\" height=\"" + std::to_string(kScale) + "\" fill=\"" +
             colour(static_cast<std::size_t>(y) * img.width + static_cast<std::size_t>(x)) +
             "\"/>\n";
      }
    }
    s += "</g>\n";
  };
  raster(kGap, [&](std::size_t i) {
    const int g = byte(img.pixels[i]);
    return hex(g, g, g);
  });
  raster(2 * kGap + w * kScale,
         [&](std::size_t i) { return heat_colour(hmax > 0.0 ? heat.pixels[i] / hmax : 0.0); });
  s += "</svg>\n";
  return s;
}

}  // namespace mammo::svg

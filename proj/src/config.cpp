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

#include "mammo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mammo/error.hpp"

namespace mammo {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorKind::kConfig, "bad value '" + value + "' for " + key + " (expected " + expected + ")");
}

// Shortest decimal form that reads back as the same double.
std::string fmt(double v) {
  char buf[64];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  const std::string s = trim(value);
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    bad(key, value, std::is_integral_v<T> ? "an integer" : "a number");
  }
  return v;
}

bool boolean(const std::string& key, const std::string& value) {
  const std::string s = trim(value);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad(key, value, "true or false");
}

template <typename T>
std::vector<T> list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number<T>(key, item));
  if (out.empty()) bad(key, value, "a comma-separated list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
Field num(std::string key, T& ref) {
  return {key,
          [&ref, key](const std::string& v) { ref = number<T>(key, v); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt(ref);
            } else {
              return std::to_string(ref);
            }
          }};
}

Field flag(std::string key, bool& ref) {
  return {key, [&ref, key](const std::string& v) { ref = boolean(key, v); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field sizes(std::string key, std::vector<std::size_t>& ref) {
  return {key, [&ref, key](const std::string& v) { ref = list<std::size_t>(key, v); },
          [&ref] { return join(ref); }};
}

// Learning rates resize the stage list; epochs must then match it.
std::pair<Field, Field> stages(const std::string& section, std::vector<mtl::Stage>& ref) {
  const std::string lr_key = section + ".lr", ep_key = section + ".epochs";
  Field lr{lr_key,
           [&ref, lr_key](const std::string& v) {
             const auto lrs = list<double>(lr_key, v);
             const mtl::Stage last = ref.empty() ? mtl::Stage{} : ref.back();
             ref.resize(lrs.size(), last);
             for (std::size_t i = 0; i < lrs.size(); ++i) ref[i].lr = lrs[i];
           },
           [&ref] {
             std::vector<double> v;
             for (const auto& s : ref) v.push_back(s.lr);
             return join(v);
           }};
  Field ep{ep_key,
           [&ref, ep_key, lr_key](const std::string& v) {
             const auto eps = list<int>(ep_key, v);
             if (eps.size() != ref.size()) {
               fail(ErrorKind::kConfig, ep_key + " must list one value per entry of " + lr_key);
             }
             for (std::size_t i = 0; i < eps.size(); ++i) ref[i].epochs = eps[i];
           },
           [&ref] {
             std::vector<int> v;
             for (const auto& s : ref) v.push_back(s.epochs);
             return join(v);
           }};
  return {lr, ep};
}

std::vector<Field> fields(Config& c) {
  std::vector<Field> f;
  f.push_back(num("seed", c.seed));

  auto& co = c.cohort;
  f.push_back(num("cohort.n", co.n));
  f.push_back(num("cohort.prevalence", co.strata.prevalence));
  f.push_back(num("cohort.no_sign_total", co.strata.no_sign_total));
  f.push_back(num("cohort.family_history_total", co.strata.family_history_total));
  f.push_back(num("cohort.family_history_cancer", co.strata.family_history_cancer));
  f.push_back(num("cohort.spread_malignant", co.strata.spread_malignant));
  f.push_back(num("cohort.spread_benign", co.strata.spread_benign));
  f.push_back(num("cohort.overlap_probability", co.strata.overlap_probability));
  f.push_back({"cohort.reader",
               [&co](const std::string& v) {
                 const auto s = trim(v);
                 if (s != "calibrated" && s != "constant") {
                   bad("cohort.reader", v, "calibrated or constant");
                 }
                 co.reader = s;
               },
               [&co] { return co.reader; }});
  f.push_back(num("cohort.reader_fnr", co.reader_fnr));
  f.push_back(num("cohort.reader_fpr", co.reader_fpr));
  f.push_back(num("cohort.annotation_noise", co.annotation_noise));

  f.push_back(num("split.holdout", co.split.holdout));
  f.push_back(num("split.stage1", co.split.fractions[0]));
  f.push_back(num("split.stage2", co.split.fractions[1]));
  f.push_back(num("split.stage3", co.split.fractions[2]));
  f.push_back(num("split.validation", co.split.fractions[3]));

  auto& a = c.augment;
  f.push_back(flag("augment.hflip", a.allow_hflip));
  f.push_back(flag("augment.vflip", a.allow_vflip));
  f.push_back(num("augment.max_rotation", a.max_rotation));
  f.push_back(num("augment.max_shear", a.max_shear));
  f.push_back(num("augment.max_zoom", a.max_zoom));
  f.push_back(num("augment.max_shift", a.max_shift));
  f.push_back(flag("augment.clahe", a.clahe_enabled));
  f.push_back(num("augment.clahe_grid", a.clahe_grid));
  f.push_back(num("augment.clahe_clip", a.clahe_clip));
  f.push_back(num("augment.noise_sigma", a.noise_sigma));

  auto& m = c.mtl;
  f.push_back(sizes("mtl.hidden", m.hidden));
  f.push_back(num("mtl.dropout", m.dropout));
  auto [mlr, mep] = stages("mtl", m.schedule.stages);
  f.push_back(mlr);
  f.push_back(mep);
  f.push_back(num("mtl.batch", m.schedule.batch_size));
  f.push_back(num("mtl.momentum", m.schedule.momentum));
  f.push_back(flag("mtl.class_balance", m.schedule.class_balance));
  f.push_back(num("mtl.w_diagnosis", m.loss.weights.diagnosis));
  f.push_back(num("mtl.w_sign", m.loss.weights.sign));
  f.push_back(num("mtl.w_suspicion", m.loss.weights.suspicion));
  f.push_back(num("mtl.w_conspicuity", m.loss.weights.conspicuity));
  f.push_back(num("mtl.w_density", m.loss.weights.density));
  f.push_back(num("mtl.w_age", m.loss.weights.age));
  f.push_back(num("mtl.focal_alpha", m.loss.focal.alpha));
  f.push_back(num("mtl.focal_gamma", m.loss.focal.gamma));

  auto& k = c.classifier;
  f.push_back(sizes("classifier.hidden", k.hidden));
  f.push_back(num("classifier.dropout", k.dropout));
  auto [clr, cep] = stages("classifier", k.schedule.stages);
  f.push_back(clr);
  f.push_back(cep);
  f.push_back(num("classifier.momentum", k.schedule.momentum));
  f.push_back(num("classifier.focal_alpha", k.schedule.focal.alpha));
  f.push_back(num("classifier.focal_gamma", k.schedule.focal.gamma));
  f.push_back(num("classifier.tta", k.tta));

  auto& t = c.triage;
  auto [tlr, tep] = stages("triage", t.schedule.stages);
  f.push_back(tlr);
  f.push_back(tep);
  f.push_back(num("triage.batch", t.schedule.batch_size));
  f.push_back(num("triage.momentum", t.schedule.momentum));
  f.push_back(num("triage.label_threshold", t.schedule.label_threshold));
  f.push_back(num("triage.dropout", t.schedule.dropout));
  f.push_back(num("triage.delta", t.grid.delta));
  f.push_back(num("triage.b_max", t.grid.b_max));

  auto& r = c.report;
  f.push_back(num("report.random_allocations", r.random_allocations));
  f.push_back(num("report.saliency_patients", r.saliency_patients));
  f.push_back(num("report.conspicuity_high", r.conspicuity_high));
  f.push_back(num("report.suspicion_high", r.suspicion_high));
  f.push_back(num("report.density_high", r.density_high));
  f.push_back(num("report.age_split", r.age_split));
  return f;
}

}  // namespace

cohort::ReaderProfile CohortSettings::reader_profile() const {
  auto p = reader == "constant" ? cohort::ReaderProfile::constant(reader_fnr, reader_fpr)
                                : cohort::ReaderProfile::calibrated(strata);
  p.annotation_noise = annotation_noise;
  return p;
}

Config Config::standard() {
  Config c;
  c.augment.max_rotation = 0.0;
  c.augment.max_shear = 0.0;
  c.augment.max_zoom = 0.0;
  c.augment.max_shift = 0.0;
  c.augment.clahe_enabled = false;
  c.mtl.schedule.stages = {{1e-3, 15}, {1e-4, 10}};
  c.classifier.schedule.stages = {{1e-2, 10}, {1e-3, 10}};
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  for (auto& f : fields(*this)) {
    if (f.key == key) {
      f.set(value);
      return;
    }
  }
  fail(ErrorKind::kConfig, "unknown key '" + key + "'");
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& f : fields(const_cast<Config&>(*this))) out.push_back(f.key);
  return out;
}

std::string Config::resolved() const {
  std::string out;
  std::string section;
  for (const auto& f : fields(const_cast<Config&>(*this))) {
    const auto dot = f.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + f.get() + "\n";
  }
  return out;
}

void Config::validate() const {
  try {
    if (cohort.n < 10) fail("cohort.n must be at least 10");
    cohort.strata.validate();
    if (!(cohort.reader_fnr >= 0.0 && cohort.reader_fnr <= 1.0) ||
        !(cohort.reader_fpr >= 0.0 && cohort.reader_fpr <= 1.0)) {
      fail("reader rates must be in [0, 1]");
    }
    if (!(cohort.annotation_noise >= 0.0 && cohort.annotation_noise <= 1.0)) {
      fail("annotation noise must be in [0, 1]");
    }
    cohort.reader_profile().validate();
    cohort.split.validate();
    if (cohort.split.holdout >= cohort.n) fail("split.holdout must be smaller than cohort.n");
    augment.validate();
    mtl::make_arch(mtl::kImageWidth * mtl::kImageHeight, mtl.hidden, mtl.dropout);
    mtl.schedule.validate();
    loss::validate(mtl.loss.weights);
    loss::validate(mtl.loss.focal);
    fusion::classifier_arch(fusion::kFusionSize, classifier.hidden, classifier.dropout);
    classifier.schedule.validate();
    triage.schedule.validate();
    triage.grid.validate();
    if (report.random_allocations == 0) fail("report.random_allocations must be positive");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    fail(ErrorKind::kConfig, std::string("invalid configuration: ") + e.what());
  }
}

Config parse_config(const std::string& text, Config base, const std::string& origin) {
  std::stringstream ss(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::kConfig, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kConfig, where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      base.set(full, line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, where + e.what());
    }
  }
  return base;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kConfig, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), Config::standard(), path.string());
}

}  // namespace mammo

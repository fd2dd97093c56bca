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

#include <filesystem>
#include <fstream>
#include <functional>

#include "mammo/config.hpp"
#include "mammo/error.hpp"

namespace mammo {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIo;
}

TEST(Config, StandardIsValid) {
  const Config c = Config::standard();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.seed, 2026u);
  EXPECT_EQ(c.cohort.n, 8162u);
  EXPECT_EQ(c.cohort.split.holdout, 1000u);
  EXPECT_FALSE(c.augment.clahe_enabled);
  EXPECT_EQ(c.triage.grid.values().size(), 9u);
}

TEST(Config, ResolvedRoundTrip) {
  Config c = Config::standard();
  c.set("seed", "77");
  c.set("mtl.lr", "0.01, 0.001");
  c.set("mtl.epochs", "3, 4");
  c.set("cohort.prevalence", "0.1");
  c.set("triage.delta", "0.5");
  c.set("augment.clahe", "true");
  const std::string text = c.resolved();
  const Config back = parse_config(text, Config{});
  EXPECT_EQ(back.resolved(), text);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.mtl.schedule.stages.size(), 2u);
  EXPECT_EQ(back.mtl.schedule.stages[1].epochs, 4);
  EXPECT_EQ(back.cohort.strata.prevalence, 0.1);
  EXPECT_TRUE(back.augment.clahe_enabled);
  // Every key appears exactly once.
  for (const auto& k : c.keys()) {
    const auto leaf = k.substr(k.find('.') + 1);
    EXPECT_NE(text.find(leaf + " = "), std::string::npos) << k;
  }
}

TEST(Config, SectionsAndComments) {
  const Config c = parse_config(
      "# comment\n"
      "seed = 5\n"
      "\n"
      "[triage]\n"
      "b_max = 1.5   \n"
      "[cohort]\n"
      "n=500\n"
      "[split]\n"
      "holdout = 100\n");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.triage.grid.b_max, 1.5);
  EXPECT_EQ(c.cohort.n, 500u);
  EXPECT_EQ(c.cohort.split.holdout, 100u);
}

TEST(Config, Errors) {
  EXPECT_EQ(kind_of([] { parse_config("nonsense = 1\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("seed = minus one\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("[triage\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("seed 5\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("mtl.lr = 0.1\nmtl.epochs = 1, 2\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("augment.hflip = maybe\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("split.holdout = 9000\n").validate(); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("cohort.reader = psychic\n").validate(); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/mammo.cfg"); }), ErrorKind::kConfig);
  try {
    parse_config("seed = 1\nbogus = 2\n", Config::standard(), "run.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(Config, ConstantReader) {
  Config c = Config::standard();
  c.set("cohort.reader", "constant");
  c.set("cohort.reader_fnr", "0.1");
  const auto p = c.cohort.reader_profile();
  EXPECT_EQ(p.fnr_at(0, 0, false), 0.1);
  EXPECT_EQ(p.fnr_at(3, 2, true), 0.1);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "mammo_config_test.cfg";
  {
    std::ofstream os(path);
    os << "[report]\nrandom_allocations = 7\n";
  }
  EXPECT_EQ(load_config(path).report.random_allocations, 7u);
}

}  // namespace
}  // namespace mammo

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
#include <random>
#include <vector>

#include "mammo/simd/kernels.hpp"

namespace mammo::simd {
namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!cpu_supports(Isa::kAvx2)) GTEST_SKIP() << "no AVX2 on this CPU";
  }
};

TEST_F(KernelEquivalence, Dot) {
  const auto& s = table_for(Isa::kScalar);
  const auto& v = table_for(Isa::kAvx2);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 2080u}) {
    const auto a = random_vector(n, n + 1), b = random_vector(n, n + 2);
    const double ref = s.dot(a.data(), b.data(), n);
    EXPECT_NEAR(v.dot(a.data(), b.data(), n), ref, 1e-12 * (1.0 + static_cast<double>(n)));
  }
}

TEST_F(KernelEquivalence, Axpy) {
  const auto& s = table_for(Isa::kScalar);
  const auto& v = table_for(Isa::kAvx2);
  for (std::size_t n : {0u, 1u, 5u, 8u, 129u}) {
    const auto x = random_vector(n, 3);
    auto y1 = random_vector(n, 4), y2 = y1;
    s.axpy(0.37, x.data(), y1.data(), n);
    v.axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15);
  }
}

TEST_F(KernelEquivalence, GemmNt) {
  const auto& s = table_for(Isa::kScalar);
  const auto& v = table_for(Isa::kAvx2);
  struct Shape {
    std::size_t m, n, k;
  };
  for (const auto& sh : {Shape{1, 1, 1}, Shape{3, 5, 7}, Shape{16, 128, 2080}, Shape{5, 19, 64},
                         Shape{4, 2, 16}}) {
    const auto a = random_vector(sh.m * sh.k, 5), b = random_vector(sh.n * sh.k, 6);
    const auto bias = random_vector(sh.n, 7);
    for (const double* bp : {static_cast<const double*>(nullptr), bias.data()}) {
      std::vector<double> c1(sh.m * sh.n), c2(sh.m * sh.n);
      s.gemm_nt(sh.m, sh.n, sh.k, a.data(), b.data(), bp, c1.data());
      v.gemm_nt(sh.m, sh.n, sh.k, a.data(), b.data(), bp, c2.data());
      for (std::size_t i = 0; i < c1.size(); ++i) {
        EXPECT_NEAR(c1[i], c2[i], 1e-12 * static_cast<double>(sh.k));
      }
    }
  }
}

TEST(KernelDispatch, ScalarReferenceIsExact) {
  const auto& s = table_for(Isa::kScalar);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  EXPECT_EQ(s.dot(a.data(), b.data(), 3), 32.0);
  std::vector<double> c(1);
  s.gemm_nt(1, 1, 3, a.data(), b.data(), nullptr, c.data());
  EXPECT_EQ(c[0], 32.0);
}

TEST(KernelDispatch, ForcingAnIsaSticks) {
  const Isa before = active_isa();
  set_isa(Isa::kScalar);
  EXPECT_EQ(active_isa(), Isa::kScalar);
  EXPECT_EQ(isa_name(Isa::kScalar), "scalar");
  set_isa(before);
  EXPECT_EQ(active_isa(), before);
}

}  // namespace
}  // namespace mammo::simd

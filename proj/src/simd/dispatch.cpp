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

#include <atomic>
#include <cstdlib>
#include <string>

#include "mammo/error.hpp"
#include "mammo/simd/kernels.hpp"

namespace mammo::simd {
namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy,
                                   &scalar::gemm_nt};
#if defined(MAMMO_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::gemm_nt};
#endif

Isa detect() noexcept {
  if (const char* env = std::getenv("MAMMO_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && cpu_supports(Isa::kAvx2)) return Isa::kAvx2;
  }
  return cpu_supports(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(MAMMO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) noexcept {
#if defined(MAMMO_HAVE_AVX2)
  if (isa == Isa::kAvx2 && cpu_supports(Isa::kAvx2)) return kAvx2Table;
#else
  (void)isa;
#endif
  return kScalarTable;
}

const KernelTable& kernels() noexcept {
  return table_for(active().load(std::memory_order_relaxed));
}

Isa active_isa() noexcept {
  const Isa isa = active().load(std::memory_order_relaxed);
  return cpu_supports(isa) ? isa : Isa::kScalar;
}

void set_isa(Isa isa) {
  if (!cpu_supports(isa)) {
    fail("instruction set " + std::string(isa_name(isa)) +
         " is not available on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace mammo::simd

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
#include <string_view>

// Dense double-precision kernels used by the network layers.
//
// Each kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The variant is chosen once per process from CPUID and
// may be forced with MAMMO_SIMD=scalar|avx2 or set_isa(). Results of the two
// variants agree to rounding (the accumulation order differs), so the choice
// is fixed for the lifetime of a process to keep runs bit-reproducible.
namespace mammo::simd {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // c[i*n + j] = sum_k a[i*k + k'] * b[j*k + k'] (+ bias[j] when non-null).
  // Both operands row-major with a shared inner dimension k.
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, const double* bias, double* c);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, const double* bias, double* c);
}  // namespace scalar

#if defined(MAMMO_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, const double* bias, double* c);
}  // namespace avx2
#endif

bool cpu_supports(Isa isa) noexcept;

// Kernel table for a specific ISA; falls back to scalar when unsupported.
const KernelTable& table_for(Isa isa) noexcept;

// Currently active table.
const KernelTable& kernels() noexcept;
Isa active_isa() noexcept;
void set_isa(Isa isa);

std::string_view isa_name(Isa isa) noexcept;

}  // namespace mammo::simd

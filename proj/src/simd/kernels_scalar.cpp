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

#include "mammo/simd/kernels.hpp"

namespace mammo::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, const double* bias, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] = dot(row, b + j * k, k) + (bias ? bias[j] : 0.0);
    }
  }
}

}  // namespace mammo::simd::scalar

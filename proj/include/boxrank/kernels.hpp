// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace boxrank::kern {

// Dense float kernels behind the layer implementations. Every entry has a
// scalar reference implementation (ref::, templated, also used for the
// float64 gradient-check path) and may have an AVX2 variant selected at
// runtime. Scalar and SIMD variants accumulate along k in the same order,
// so they agree to within fma-contraction rounding; the equivalence suite
// pins that down.
//
// Matrix conventions: row-major, C[m x n].
//   gemm_nn:  C (+)= A[m x k] * B[k x n]
//   gemm_nt:  C (+)= A[m x k] * B[n x k]^T
//   gemm_tn:  C (+)= A[k x m]^T * B[k x n]

struct KernelTable {
  const char* name;
  void (*gemm_nn)(const float* a, const float* b, float* c, int m, int n,
                  int k, bool accumulate);
  void (*gemm_nt)(const float* a, const float* b, float* c, int m, int n,
                  int k, bool accumulate);
  void (*gemm_tn)(const float* a, const float* b, float* c, int m, int n,
                  int k, bool accumulate);
  void (*relu)(float* x, int64_t n);
  // dy[i] := dy[i] * (y[i] > 0)
  void (*relu_bwd)(const float* y, float* dy, int64_t n);
  // rows[i*n + j] += bias[i]   (channel-major conv output)
  void (*add_bias_rows)(float* rows, const float* bias, int m, int n);
  // rows[i*n + j] += bias[j]   (batch-major fc output)
  void (*add_bias_cols)(float* rows, const float* bias, int m, int n);
  // v := mu*v - lr*(g + wd*w); w += v
  void (*sgd_step)(float* w, float* v, const float* g, int64_t n, float lr,
                   float mu, float wd);
};

const KernelTable& scalar_table();
// Null when the binary lacks AVX2 support or the CPU does.
const KernelTable* avx2_table();

// Active table. Defaults to the best variant the CPU supports; the
// BOXRANK_KERNELS environment variable ("scalar"/"avx2"/"auto") or
// select() overrides. Selection is process-wide and sticky.
const KernelTable& active();
void select(std::string_view name);
std::string active_name();

namespace ref {

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = accumulate ? c[static_cast<int64_t>(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<int64_t>(i) * k + p] *
               b[static_cast<int64_t>(p) * n + j];
      c[static_cast<int64_t>(i) * n + j] = acc;
    }
  }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = accumulate ? c[static_cast<int64_t>(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<int64_t>(i) * k + p] *
               b[static_cast<int64_t>(j) * k + p];
      c[static_cast<int64_t>(i) * n + j] = acc;
    }
  }
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = accumulate ? c[static_cast<int64_t>(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<int64_t>(p) * m + i] *
               b[static_cast<int64_t>(p) * n + j];
      c[static_cast<int64_t>(i) * n + j] = acc;
    }
  }
}

template <typename T>
void relu(T* x, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    if (x[i] < T(0)) x[i] = T(0);
}

template <typename T>
void relu_bwd(const T* y, T* dy, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    if (!(y[i] > T(0))) dy[i] = T(0);
}

template <typename T>
void add_bias_rows(T* rows, const T* bias, int m, int n) {
  for (int i = 0; i < m; ++i) {
    T* row = rows + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += bias[i];
  }
}

template <typename T>
void add_bias_cols(T* rows, const T* bias, int m, int n) {
  for (int i = 0; i < m; ++i) {
    T* row = rows + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += bias[j];
  }
}

template <typename T>
void sgd_step(T* w, T* v, const T* g, int64_t n, T lr, T mu, T wd) {
  for (int64_t i = 0; i < n; ++i) {
    v[i] = mu * v[i] - lr * (g[i] + wd * w[i]);
    w[i] += v[i];
  }
}

}  // namespace ref

}  // namespace boxrank::kern

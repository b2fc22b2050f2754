// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64; the dispatcher only installs the table after a
// runtime cpuid check. Loop nests keep the k-accumulation order of the
// scalar reference so both variants agree to fma-contraction rounding
// (gemm_nt reduces in 8-wide lanes and is only tolerance-equal).

#include "boxrank/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace boxrank::kern {

namespace {

constexpr int kNr = 16;  // j-panel width in floats (two ymm)
constexpr int kMr = 4;   // i-block height

inline void gemm_nn_avx2(const float* a, const float* b, float* c, int m,
                         int n, int k, bool acc) {
  const int64_t lda = k, ldb = n, ldc = n;
  int j0 = 0;
  for (; j0 + kNr <= n; j0 += kNr) {
    int i0 = 0;
    for (; i0 + kMr <= m; i0 += kMr) {
      __m256 c00, c01, c10, c11, c20, c21, c30, c31;
      float* crow0 = c + (i0 + 0) * ldc + j0;
      float* crow1 = c + (i0 + 1) * ldc + j0;
      float* crow2 = c + (i0 + 2) * ldc + j0;
      float* crow3 = c + (i0 + 3) * ldc + j0;
      if (acc) {
        c00 = _mm256_loadu_ps(crow0);
        c01 = _mm256_loadu_ps(crow0 + 8);
        c10 = _mm256_loadu_ps(crow1);
        c11 = _mm256_loadu_ps(crow1 + 8);
        c20 = _mm256_loadu_ps(crow2);
        c21 = _mm256_loadu_ps(crow2 + 8);
        c30 = _mm256_loadu_ps(crow3);
        c31 = _mm256_loadu_ps(crow3 + 8);
      } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_ps();
      }
      const float* a0 = a + (i0 + 0) * lda;
      const float* a1 = a + (i0 + 1) * lda;
      const float* a2 = a + (i0 + 2) * lda;
      const float* a3 = a + (i0 + 3) * lda;
      for (int p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + p * ldb + j0);
        const __m256 b1 = _mm256_loadu_ps(b + p * ldb + j0 + 8);
        __m256 av = _mm256_broadcast_ss(a0 + p);
        c00 = _mm256_fmadd_ps(av, b0, c00);
        c01 = _mm256_fmadd_ps(av, b1, c01);
        av = _mm256_broadcast_ss(a1 + p);
        c10 = _mm256_fmadd_ps(av, b0, c10);
        c11 = _mm256_fmadd_ps(av, b1, c11);
        av = _mm256_broadcast_ss(a2 + p);
        c20 = _mm256_fmadd_ps(av, b0, c20);
        c21 = _mm256_fmadd_ps(av, b1, c21);
        av = _mm256_broadcast_ss(a3 + p);
        c30 = _mm256_fmadd_ps(av, b0, c30);
        c31 = _mm256_fmadd_ps(av, b1, c31);
      }
      _mm256_storeu_ps(crow0, c00);
      _mm256_storeu_ps(crow0 + 8, c01);
      _mm256_storeu_ps(crow1, c10);
      _mm256_storeu_ps(crow1 + 8, c11);
      _mm256_storeu_ps(crow2, c20);
      _mm256_storeu_ps(crow2 + 8, c21);
      _mm256_storeu_ps(crow3, c30);
      _mm256_storeu_ps(crow3 + 8, c31);
    }
    for (; i0 < m; ++i0) {
      __m256 c0, c1;
      float* crow = c + i0 * ldc + j0;
      if (acc) {
        c0 = _mm256_loadu_ps(crow);
        c1 = _mm256_loadu_ps(crow + 8);
      } else {
        c0 = c1 = _mm256_setzero_ps();
      }
      const float* arow = a + i0 * lda;
      for (int p = 0; p < k; ++p) {
        const __m256 av = _mm256_broadcast_ss(arow + p);
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + p * ldb + j0), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + p * ldb + j0 + 8), c1);
      }
      _mm256_storeu_ps(crow, c0);
      _mm256_storeu_ps(crow + 8, c1);
    }
  }
  if (j0 < n) {
    for (int i = 0; i < m; ++i) {
      for (int j = j0; j < n; ++j) {
        float accv = acc ? c[i * ldc + j] : 0.0f;
        const float* arow = a + i * lda;
        for (int p = 0; p < k; ++p) accv += arow[p] * b[p * ldb + j];
        c[i * ldc + j] = accv;
      }
    }
  }
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 su = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, su);
  su = _mm_add_ss(su, sh);
  return _mm_cvtss_f32(su);
}

inline void gemm_nt_avx2(const float* a, const float* b, float* c, int m,
                         int n, int k, bool acc) {
  const int64_t lda = k, ldb = k, ldc = n;
  const int k8 = k & ~7;
  int i0 = 0;
  for (; i0 + kMr <= m; i0 += kMr) {
    const float* a0 = a + (i0 + 0) * lda;
    const float* a1 = a + (i0 + 1) * lda;
    const float* a2 = a + (i0 + 2) * lda;
    const float* a3 = a + (i0 + 3) * lda;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + j * ldb;
      __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps(),
             s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8) {
        const __m256 bv = _mm256_loadu_ps(brow + p);
        s0 = _mm256_fmadd_ps(_mm256_loadu_ps(a0 + p), bv, s0);
        s1 = _mm256_fmadd_ps(_mm256_loadu_ps(a1 + p), bv, s1);
        s2 = _mm256_fmadd_ps(_mm256_loadu_ps(a2 + p), bv, s2);
        s3 = _mm256_fmadd_ps(_mm256_loadu_ps(a3 + p), bv, s3);
      }
      float d0 = hsum(s0), d1 = hsum(s1), d2 = hsum(s2), d3 = hsum(s3);
      for (int p = k8; p < k; ++p) {
        d0 += a0[p] * brow[p];
        d1 += a1[p] * brow[p];
        d2 += a2[p] * brow[p];
        d3 += a3[p] * brow[p];
      }
      if (acc) {
        c[(i0 + 0) * ldc + j] += d0;
        c[(i0 + 1) * ldc + j] += d1;
        c[(i0 + 2) * ldc + j] += d2;
        c[(i0 + 3) * ldc + j] += d3;
      } else {
        c[(i0 + 0) * ldc + j] = d0;
        c[(i0 + 1) * ldc + j] = d1;
        c[(i0 + 2) * ldc + j] = d2;
        c[(i0 + 3) * ldc + j] = d3;
      }
    }
  }
  for (; i0 < m; ++i0) {
    const float* arow = a + i0 * lda;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + j * ldb;
      __m256 s = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8)
        s = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                            _mm256_loadu_ps(brow + p), s);
      float d = hsum(s);
      for (int p = k8; p < k; ++p) d += arow[p] * brow[p];
      c[i0 * ldc + j] = acc ? c[i0 * ldc + j] + d : d;
    }
  }
}

inline void gemm_tn_avx2(const float* a, const float* b, float* c, int m,
                         int n, int k, bool acc) {
  const int64_t lda = m, ldb = n, ldc = n;
  int j0 = 0;
  for (; j0 + kNr <= n; j0 += kNr) {
    for (int i = 0; i < m; ++i) {
      __m256 c0, c1;
      float* crow = c + i * ldc + j0;
      if (acc) {
        c0 = _mm256_loadu_ps(crow);
        c1 = _mm256_loadu_ps(crow + 8);
      } else {
        c0 = c1 = _mm256_setzero_ps();
      }
      for (int p = 0; p < k; ++p) {
        const __m256 av = _mm256_broadcast_ss(a + p * lda + i);
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + p * ldb + j0), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + p * ldb + j0 + 8), c1);
      }
      _mm256_storeu_ps(crow, c0);
      _mm256_storeu_ps(crow + 8, c1);
    }
  }
  if (j0 < n) {
    for (int i = 0; i < m; ++i) {
      for (int j = j0; j < n; ++j) {
        float accv = acc ? c[i * ldc + j] : 0.0f;
        for (int p = 0; p < k; ++p) accv += a[p * lda + i] * b[p * ldb + j];
        c[i * ldc + j] = accv;
      }
    }
  }
}

inline void relu_avx2(float* x, int64_t n) {
  const __m256 zero = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i)
    if (x[i] < 0.0f) x[i] = 0.0f;
}

inline void relu_bwd_avx2(const float* y, float* dy, int64_t n) {
  const __m256 zero = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(dy + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), mask));
  }
  for (; i < n; ++i)
    if (!(y[i] > 0.0f)) dy[i] = 0.0f;
}

inline void add_bias_rows_avx2(float* rows, const float* bias, int m, int n) {
  for (int i = 0; i < m; ++i) {
    float* row = rows + static_cast<int64_t>(i) * n;
    const __m256 bv = _mm256_broadcast_ss(bias + i);
    int j = 0;
    for (; j + 8 <= n; j += 8)
      _mm256_storeu_ps(row + j, _mm256_add_ps(_mm256_loadu_ps(row + j), bv));
    for (; j < n; ++j) row[j] += bias[i];
  }
}

inline void add_bias_cols_avx2(float* rows, const float* bias, int m, int n) {
  for (int i = 0; i < m; ++i) {
    float* row = rows + static_cast<int64_t>(i) * n;
    int j = 0;
    for (; j + 8 <= n; j += 8)
      _mm256_storeu_ps(row + j, _mm256_add_ps(_mm256_loadu_ps(row + j),
                                              _mm256_loadu_ps(bias + j)));
    for (; j < n; ++j) row[j] += bias[j];
  }
}

inline void sgd_step_avx2(float* w, float* v, const float* g, int64_t n,
                          float lr, float mu, float wd) {
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vmu = _mm256_set1_ps(mu);
  const __m256 vwd = _mm256_set1_ps(wd);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 wv = _mm256_loadu_ps(w + i);
    const __m256 gv = _mm256_fmadd_ps(vwd, wv, _mm256_loadu_ps(g + i));
    const __m256 vv = _mm256_fnmadd_ps(vlr, gv,
                                       _mm256_mul_ps(vmu, _mm256_loadu_ps(v + i)));
    _mm256_storeu_ps(v + i, vv);
    _mm256_storeu_ps(w + i, _mm256_add_ps(wv, vv));
  }
  for (; i < n; ++i) {
    v[i] = mu * v[i] - lr * (g[i] + wd * w[i]);
    w[i] += v[i];
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t{
      "avx2",           gemm_nn_avx2,       gemm_nt_avx2,       gemm_tn_avx2,
      relu_avx2,        relu_bwd_avx2,      add_bias_rows_avx2,
      add_bias_cols_avx2, sgd_step_avx2,
  };
  return &t;
}

}  // namespace boxrank::kern

#else  // !(__AVX2__ && __FMA__)

namespace boxrank::kern {

const KernelTable* avx2_table() { return nullptr; }

}  // namespace boxrank::kern

#endif

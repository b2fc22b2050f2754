// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/kernels.hpp"

namespace boxrank::kern {

namespace {

void gemm_nn_f(const float* a, const float* b, float* c, int m, int n, int k,
               bool acc) {
  ref::gemm_nn(a, b, c, m, n, k, acc);
}
void gemm_nt_f(const float* a, const float* b, float* c, int m, int n, int k,
               bool acc) {
  ref::gemm_nt(a, b, c, m, n, k, acc);
}
void gemm_tn_f(const float* a, const float* b, float* c, int m, int n, int k,
               bool acc) {
  ref::gemm_tn(a, b, c, m, n, k, acc);
}
void relu_f(float* x, int64_t n) { ref::relu(x, n); }
void relu_bwd_f(const float* y, float* dy, int64_t n) {
  ref::relu_bwd(y, dy, n);
}
void add_bias_rows_f(float* rows, const float* bias, int m, int n) {
  ref::add_bias_rows(rows, bias, m, n);
}
void add_bias_cols_f(float* rows, const float* bias, int m, int n) {
  ref::add_bias_cols(rows, bias, m, n);
}
void sgd_step_f(float* w, float* v, const float* g, int64_t n, float lr,
                float mu, float wd) {
  ref::sgd_step(w, v, g, n, lr, mu, wd);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{
      "scalar",        gemm_nn_f,       gemm_nt_f,       gemm_tn_f,
      relu_f,          relu_bwd_f,      add_bias_rows_f, add_bias_cols_f,
      sgd_step_f,
  };
  return t;
}

}  // namespace boxrank::kern

// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent brute-force references for the kernel and metric tests. These
// are deliberately written as direct loops over the definitions and share
// no code with the implementations they check.
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "boxrank/geometry.hpp"
#include "boxrank/tensor.hpp"

namespace oracle {

// Direct quintuple-loop cross-correlation, accumulating in double.
template <typename T>
boxrank::Tensor<double> conv2d(const boxrank::Tensor<T>& x,
                               const boxrank::Tensor<T>& w,
                               const std::vector<T>& bias, int k, int s,
                               int p) {
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int co = w.dim(0);
  const int oh = (h + 2 * p - k) / s + 1;
  const int ow = (wd + 2 * p - k) / s + 1;
  boxrank::Tensor<double> y = boxrank::Tensor<double>::nchw(n, co, oh, ow);
  for (int item = 0; item < n; ++item)
    for (int oc = 0; oc < co; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = static_cast<double>(bias[static_cast<size_t>(oc)]);
          for (int ic = 0; ic < ci; ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * s - p + ky;
                const int ix = ox * s - p + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                const double xv =
                    x[((static_cast<int64_t>(item) * ci + ic) * h + iy) * wd +
                      ix];
                const double wv =
                    w[((static_cast<int64_t>(oc) * ci + ic) * k + ky) * k +
                      kx];
                acc += xv * wv;
              }
          y[((static_cast<int64_t>(item) * co + oc) * oh + oy) * ow + ox] =
              acc;
        }
  return y;
}

// Naive dot-product affine map; weights are input-major [in x out].
template <typename T>
boxrank::Tensor<double> fc(const boxrank::Tensor<T>& x,
                           const boxrank::Tensor<T>& w,
                           const std::vector<T>& bias) {
  const int batch = x.dim(0);
  const int in = static_cast<int>(x.size() / batch);
  const int out = w.dim(1);
  boxrank::Tensor<double> y({batch, out});
  for (int i = 0; i < batch; ++i)
    for (int j = 0; j < out; ++j) {
      double acc = static_cast<double>(bias[static_cast<size_t>(j)]);
      for (int p = 0; p < in; ++p)
        acc += static_cast<double>(x[static_cast<int64_t>(i) * in + p]) *
               static_cast<double>(w[static_cast<int64_t>(p) * out + j]);
      y[static_cast<int64_t>(i) * out + j] = acc;
    }
  return y;
}

// Per-window scan; first occurrence of the maximum wins.
template <typename T>
void maxpool(const boxrank::Tensor<T>& x, int k, int s,
             boxrank::Tensor<T>* y, std::vector<int32_t>* argmax) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = (h - k) / s + 1;
  const int ow = (w - k) / s + 1;
  *y = boxrank::Tensor<T>::nchw(n, c, oh, ow);
  argmax->assign(static_cast<size_t>(n) * c * oh * ow, 0);
  int64_t oi = 0;
  for (int item = 0; item < n; ++item)
    for (int ch = 0; ch < c; ++ch) {
      const T* plane =
          x.data() + (static_cast<int64_t>(item) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox, ++oi) {
          T best = plane[static_cast<int64_t>(oy * s) * w + ox * s];
          int bidx = oy * s * w + ox * s;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * s + ky, ix = ox * s + kx;
              const T v = plane[static_cast<int64_t>(iy) * w + ix];
              if (v > best) {
                best = v;
                bidx = iy * w + ix;
              }
            }
          (*y)[oi] = best;
          (*argmax)[static_cast<size_t>(oi)] = bidx;
        }
    }
}

// Brute-force fixed-grid roi max-pool over an integer feature-space box.
// Bin walls at floor(i*extent/bins); empty bins replicate the clamped cell.
template <typename T>
boxrank::Tensor<T> roi_maxpool(const boxrank::Tensor<T>& fmap, int rx0,
                               int ry0, int rx1, int ry1, int bins_y,
                               int bins_x) {
  const int c = fmap.dim(1), h = fmap.dim(2), w = fmap.dim(3);
  const int rh = ry1 - ry0, rw = rx1 - rx0;
  boxrank::Tensor<T> out = boxrank::Tensor<T>::nchw(1, c, bins_y, bins_x);
  for (int ch = 0; ch < c; ++ch)
    for (int by = 0; by < bins_y; ++by)
      for (int bx = 0; bx < bins_x; ++bx) {
        int y0 = ry0 + static_cast<int>(static_cast<int64_t>(by) * rh / bins_y);
        int y1 = ry0 +
                 static_cast<int>(static_cast<int64_t>(by + 1) * rh / bins_y);
        int x0 = rx0 + static_cast<int>(static_cast<int64_t>(bx) * rw / bins_x);
        int x1 = rx0 +
                 static_cast<int>(static_cast<int64_t>(bx + 1) * rw / bins_x);
        if (y1 <= y0) {
          y0 = std::min(y0, ry1 - 1);
          y1 = y0 + 1;
        }
        if (x1 <= x0) {
          x0 = std::min(x0, rx1 - 1);
          x1 = x0 + 1;
        }
        T best = fmap[(static_cast<int64_t>(ch) * h + y0) * w + x0];
        for (int yy = y0; yy < y1; ++yy)
          for (int xx = x0; xx < x1; ++xx)
            best = std::max(
                best, fmap[(static_cast<int64_t>(ch) * h + yy) * w + xx]);
        out[(static_cast<int64_t>(ch) * bins_y + by) * bins_x + bx] = best;
      }
  return out;
}

}  // namespace oracle

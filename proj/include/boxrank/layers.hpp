// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "boxrank/error.hpp"
#include "boxrank/kernels.hpp"
#include "boxrank/tensor.hpp"

namespace boxrank {

inline int conv_out_dim(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

namespace detail {

// float routes through the runtime-dispatched kernel table; double (the
// gradient-check mode) always uses the scalar reference.
template <typename T>
struct Kern {
  static void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k,
                      bool acc) {
    kern::ref::gemm_nn(a, b, c, m, n, k, acc);
  }
  static void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k,
                      bool acc) {
    kern::ref::gemm_nt(a, b, c, m, n, k, acc);
  }
  static void gemm_tn(const T* a, const T* b, T* c, int m, int n, int k,
                      bool acc) {
    kern::ref::gemm_tn(a, b, c, m, n, k, acc);
  }
  static void relu(T* x, int64_t n) { kern::ref::relu(x, n); }
  static void relu_bwd(const T* y, T* dy, int64_t n) {
    kern::ref::relu_bwd(y, dy, n);
  }
  static void add_bias_rows(T* rows, const T* bias, int m, int n) {
    kern::ref::add_bias_rows(rows, bias, m, n);
  }
  static void add_bias_cols(T* rows, const T* bias, int m, int n) {
    kern::ref::add_bias_cols(rows, bias, m, n);
  }
  static void sgd_step(T* w, T* v, const T* g, int64_t n, T lr, T mu, T wd) {
    kern::ref::sgd_step(w, v, g, n, lr, mu, wd);
  }
};

template <>
struct Kern<float> {
  static void gemm_nn(const float* a, const float* b, float* c, int m, int n,
                      int k, bool acc) {
    kern::active().gemm_nn(a, b, c, m, n, k, acc);
  }
  static void gemm_nt(const float* a, const float* b, float* c, int m, int n,
                      int k, bool acc) {
    kern::active().gemm_nt(a, b, c, m, n, k, acc);
  }
  static void gemm_tn(const float* a, const float* b, float* c, int m, int n,
                      int k, bool acc) {
    kern::active().gemm_tn(a, b, c, m, n, k, acc);
  }
  static void relu(float* x, int64_t n) { kern::active().relu(x, n); }
  static void relu_bwd(const float* y, float* dy, int64_t n) {
    kern::active().relu_bwd(y, dy, n);
  }
  static void add_bias_rows(float* rows, const float* bias, int m, int n) {
    kern::active().add_bias_rows(rows, bias, m, n);
  }
  static void add_bias_cols(float* rows, const float* bias, int m, int n) {
    kern::active().add_bias_cols(rows, bias, m, n);
  }
  static void sgd_step(float* w, float* v, const float* g, int64_t n,
                       float lr, float mu, float wd) {
    kern::active().sgd_step(w, v, g, n, lr, mu, wd);
  }
};

// col[(c*k+ky)*k+kx][(oy-oy0)*ow + ox] = x[c][oy*s-p+ky][ox*s-p+kx]
// over the output-row block [oy0, oy1); zero where the tap is in padding.
template <typename T>
void im2col_block(const T* x, int c_in, int h, int w, int k, int s, int p,
                  int ow, int oy0, int oy1, T* col) {
  const int nb = (oy1 - oy0) * ow;
  for (int c = 0; c < c_in; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* crow = col + (static_cast<int64_t>(c) * k * k + ky * k + kx) * nb;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * s - p + ky;
          T* dst = crow + static_cast<int64_t>(oy - oy0) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = x + (static_cast<int64_t>(c) * h + iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - p + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add_block(const T* col, int c_in, int h, int w, int k, int s,
                      int p, int ow, int oy0, int oy1, T* dx) {
  const int nb = (oy1 - oy0) * ow;
  for (int c = 0; c < c_in; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* crow =
            col + (static_cast<int64_t>(c) * k * k + ky * k + kx) * nb;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= h) continue;
          const T* src = crow + static_cast<int64_t>(oy - oy0) * ow;
          T* dst = dx + (static_cast<int64_t>(c) * h + iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - p + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor<T>(value.shape());
  }
  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual std::vector<Param<T>*> params() { return {}; }
  virtual const char* kind() const = 0;

 protected:
  void need_tape(bool have) const {
    if (!have) throw StateError(msg(kind(), ": backward before forward"));
  }
};

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(std::string name, int in_c, int out_c, int k, int s, int p)
      : name_(std::move(name)), in_c_(in_c), out_c_(out_c), k_(k), s_(s),
        p_(p) {
    if (k < 1 || s < 1 || out_c < 1 || in_c < 1 || p < 0)
      throw ConfigError(msg("conv ", name_, ": bad spec k=", k, " s=", s,
                            " c=", out_c, " p=", p));
    weight_ = Param<T>(name_ + "_w",
                       Tensor<T>({out_c, in_c, k, k}));
    bias_ = Param<T>(name_ + "_b", Tensor<T>({out_c}));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    validate_input(x);
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = conv_out_dim(h, k_, s_, p_);
    const int ow = conv_out_dim(w, k_, s_, p_);
    Tensor<T> y = Tensor<T>::nchw(n, out_c_, oh, ow);
    const int kk = in_c_ * k_ * k_;
    const int block = row_block(ow, kk);
    std::vector<T> col;
    std::vector<T> yblk;
    for (int item = 0; item < n; ++item) {
      const T* xp = x.data() + static_cast<int64_t>(item) * in_c_ * h * w;
      T* yp = y.data() + static_cast<int64_t>(item) * out_c_ * oh * ow;
      for (int oy0 = 0; oy0 < oh; oy0 += block) {
        const int oy1 = std::min(oh, oy0 + block);
        const int nb = (oy1 - oy0) * ow;
        col.resize(static_cast<size_t>(kk) * nb);
        yblk.resize(static_cast<size_t>(out_c_) * nb);
        detail::im2col_block(xp, in_c_, h, w, k_, s_, p_, ow, oy0, oy1,
                             col.data());
        detail::Kern<T>::gemm_nn(weight_.value.data(), col.data(),
                                 yblk.data(), out_c_, nb, kk, false);
        detail::Kern<T>::add_bias_rows(yblk.data(), bias_.value.data(),
                                       out_c_, nb);
        for (int c = 0; c < out_c_; ++c)
          std::memcpy(yp + (static_cast<int64_t>(c) * oh + oy0) * ow,
                      yblk.data() + static_cast<int64_t>(c) * nb,
                      sizeof(T) * nb);
      }
    }
    x_ = x;
    have_tape_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->need_tape(have_tape_);
    const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const int oh = conv_out_dim(h, k_, s_, p_);
    const int ow = conv_out_dim(w, k_, s_, p_);
    if (dy.rank() != 4 || dy.dim(0) != n || dy.dim(1) != out_c_ ||
        dy.dim(2) != oh || dy.dim(3) != ow)
      throw DimensionError(msg("conv ", name_, ": upstream gradient shape"));
    Tensor<T> dx(x_.shape());
    const int kk = in_c_ * k_ * k_;
    const int block = row_block(ow, kk);
    std::vector<T> col, dyblk, dcol;
    for (int item = 0; item < n; ++item) {
      const T* xp = x_.data() + static_cast<int64_t>(item) * in_c_ * h * w;
      const T* dyp = dy.data() + static_cast<int64_t>(item) * out_c_ * oh * ow;
      T* dxp = dx.data() + static_cast<int64_t>(item) * in_c_ * h * w;
      for (int oy0 = 0; oy0 < oh; oy0 += block) {
        const int oy1 = std::min(oh, oy0 + block);
        const int nb = (oy1 - oy0) * ow;
        col.resize(static_cast<size_t>(kk) * nb);
        dyblk.resize(static_cast<size_t>(out_c_) * nb);
        dcol.resize(static_cast<size_t>(kk) * nb);
        for (int c = 0; c < out_c_; ++c)
          std::memcpy(dyblk.data() + static_cast<int64_t>(c) * nb,
                      dyp + (static_cast<int64_t>(c) * oh + oy0) * ow,
                      sizeof(T) * nb);
        detail::im2col_block(xp, in_c_, h, w, k_, s_, p_, ow, oy0, oy1,
                             col.data());
        // dW += dY * col^T ; dcol = W^T * dY ; db += row sums
        detail::Kern<T>::gemm_nt(dyblk.data(), col.data(),
                                 weight_.grad.data(), out_c_, kk, nb, true);
        detail::Kern<T>::gemm_tn(weight_.value.data(), dyblk.data(),
                                 dcol.data(), kk, nb, out_c_, false);
        for (int c = 0; c < out_c_; ++c) {
          T s = T(0);
          const T* row = dyblk.data() + static_cast<int64_t>(c) * nb;
          for (int j = 0; j < nb; ++j) s += row[j];
          bias_.grad[c] += s;
        }
        detail::col2im_add_block(dcol.data(), in_c_, h, w, k_, s_, p_, ow,
                                 oy0, oy1, dxp);
      }
    }
    have_tape_ = false;
    x_ = Tensor<T>();
    return dx;
  }

  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  const char* kind() const override { return "conv"; }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int kernel() const { return k_; }
  int stride() const { return s_; }
  int padding() const { return p_; }
  int out_channels() const { return out_c_; }

 private:
  void validate_input(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.dim(1) != in_c_)
      throw DimensionError(msg("conv ", name_, ": expected NCHW input with ",
                               in_c_, " channels"));
    if (x.dim(2) + 2 * p_ < k_ || x.dim(3) + 2 * p_ < k_)
      throw DimensionError(msg("conv ", name_, ": input ", x.dim(2), "x",
                               x.dim(3), " smaller than kernel ", k_,
                               " after padding ", p_));
  }

  static int row_block(int ow, int kk) {
    // Cap the im2col scratch near 8 MB.
    const int64_t budget = 8LL << 20;
    int rows = static_cast<int>(budget / (static_cast<int64_t>(kk) * ow *
                                          static_cast<int64_t>(sizeof(T))));
    return std::max(1, rows);
  }

  std::string name_;
  int in_c_, out_c_, k_, s_, p_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
  bool have_tape_ = false;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(int k, int s) : k_(k), s_(s) {
    if (k < 1 || s < 1) throw ConfigError(msg("pool: bad spec k=", k, " s=", s));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    if (x.rank() != 4) throw DimensionError("pool: expected NCHW input");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h < k_ || w < k_)
      throw DimensionError(msg("pool: window ", k_, " larger than input ", h,
                               "x", w));
    const int oh = conv_out_dim(h, k_, s_, 0);
    const int ow = conv_out_dim(w, k_, s_, 0);
    Tensor<T> y = Tensor<T>::nchw(n, c, oh, ow);
    argmax_.assign(static_cast<size_t>(n) * c * oh * ow, 0);
    in_shape_ = x.shape();
    int64_t oi = 0;
    for (int item = 0; item < n; ++item) {
      for (int ch = 0; ch < c; ++ch) {
        const T* plane =
            x.data() + (static_cast<int64_t>(item) * c + ch) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox, ++oi) {
            const int y0 = oy * s_, x0 = ox * s_;
            T best = plane[static_cast<int64_t>(y0) * w + x0];
            int bidx = y0 * w + x0;
            for (int ky = 0; ky < k_; ++ky) {
              const T* row = plane + static_cast<int64_t>(y0 + ky) * w + x0;
              for (int kx = 0; kx < k_; ++kx) {
                if (row[kx] > best) {
                  best = row[kx];
                  bidx = (y0 + ky) * w + x0 + kx;
                }
              }
            }
            y[oi] = best;
            argmax_[static_cast<size_t>(oi)] = bidx;
          }
        }
      }
    }
    have_tape_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->need_tape(have_tape_);
    const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2],
              w = in_shape_[3];
    const int oh = conv_out_dim(h, k_, s_, 0);
    const int ow = conv_out_dim(w, k_, s_, 0);
    if (dy.size() != static_cast<int64_t>(n) * c * oh * ow)
      throw DimensionError("pool: upstream gradient size mismatch");
    Tensor<T> dx(in_shape_);
    int64_t oi = 0;
    for (int item = 0; item < n; ++item) {
      for (int ch = 0; ch < c; ++ch) {
        T* plane = dx.data() + (static_cast<int64_t>(item) * c + ch) * h * w;
        for (int64_t e = 0; e < static_cast<int64_t>(oh) * ow; ++e, ++oi)
          plane[argmax_[static_cast<size_t>(oi)]] += dy[oi];
      }
    }
    have_tape_ = false;
    return dx;
  }

  const std::vector<int32_t>& argmax() const { return argmax_; }
  const char* kind() const override { return "maxpool"; }

 private:
  int k_, s_;
  std::vector<int32_t> argmax_;
  std::vector<int> in_shape_;
  bool have_tape_ = false;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> y = x;
    detail::Kern<T>::relu(y.data(), y.size());
    y_ = y;
    have_tape_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->need_tape(have_tape_);
    if (dy.size() != y_.size())
      throw DimensionError("relu: upstream gradient size mismatch");
    Tensor<T> dx = dy;
    detail::Kern<T>::relu_bwd(y_.data(), dx.data(), dx.size());
    have_tape_ = false;
    y_ = Tensor<T>();
    return dx;
  }

  const char* kind() const override { return "relu"; }

 private:
  Tensor<T> y_;
  bool have_tape_ = false;
};

template <typename T>
class FcLayer final : public Layer<T> {
 public:
  // Weights are stored input-major: value[in][out].
  FcLayer(std::string name, int in_dim, int out_dim)
      : name_(std::move(name)), in_(in_dim), out_(out_dim) {
    if (in_dim < 1 || out_dim < 1)
      throw ConfigError(msg("fc ", name_, ": bad dims ", in_dim, "x", out_dim));
    weight_ = Param<T>(name_ + "_w", Tensor<T>({in_dim, out_dim}));
    bias_ = Param<T>(name_ + "_b", Tensor<T>({out_dim}));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    const int batch = x.dim(0);
    if (x.size() % batch != 0 || x.size() / batch != in_)
      throw DimensionError(msg("fc ", name_, ": flattened input length ",
                               x.size() / batch, " != weight rows ", in_));
    Tensor<T> y({batch, out_});
    detail::Kern<T>::gemm_nn(x.data(), weight_.value.data(), y.data(), batch,
                             out_, in_, false);
    detail::Kern<T>::add_bias_cols(y.data(), bias_.value.data(), batch, out_);
    x_ = x;
    have_tape_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->need_tape(have_tape_);
    const int batch = x_.dim(0);
    if (dy.rank() != 2 || dy.dim(0) != batch || dy.dim(1) != out_)
      throw DimensionError(msg("fc ", name_, ": upstream gradient shape"));
    // dW += x^T dy ; db += column sums ; dx = dy W^T
    detail::Kern<T>::gemm_tn(x_.data(), dy.data(), weight_.grad.data(), in_,
                             out_, batch, true);
    for (int i = 0; i < batch; ++i) {
      const T* row = dy.data() + static_cast<int64_t>(i) * out_;
      for (int j = 0; j < out_; ++j) bias_.grad[j] += row[j];
    }
    Tensor<T> dx(x_.shape());
    detail::Kern<T>::gemm_nt(dy.data(), weight_.value.data(), dx.data(),
                             batch, in_, out_, false);
    have_tape_ = false;
    x_ = Tensor<T>();
    return dx;
  }

  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  const char* kind() const override { return "fc"; }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

 private:
  std::string name_;
  int in_, out_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
  bool have_tape_ = false;
};

// Binary softmax + cross-entropy head.
template <typename T>
struct XentResult {
  T loss;             // mean negative log-likelihood over the batch
  Tensor<T> dlogits;  // (softmax - onehot) / batch
  std::vector<T> prob_object;
};

template <typename T>
XentResult<T> softmax_xent(const Tensor<T>& logits,
                           const std::vector<int>& labels) {
  if (logits.rank() != 2 || logits.dim(1) != 2)
    throw DimensionError("softmax_xent: logits must be [batch x 2]");
  const int batch = logits.dim(0);
  if (static_cast<int>(labels.size()) != batch)
    throw DimensionError("softmax_xent: label count mismatch");
  XentResult<T> r;
  r.dlogits = Tensor<T>({batch, 2});
  r.prob_object.resize(static_cast<size_t>(batch));
  double loss = 0.0;
  for (int i = 0; i < batch; ++i) {
    const int label = labels[static_cast<size_t>(i)];
    if (label != 0 && label != 1)
      throw LabelError(msg("softmax_xent: label must be 0/1, got ", label));
    const T l0 = logits[static_cast<int64_t>(i) * 2];
    const T l1 = logits[static_cast<int64_t>(i) * 2 + 1];
    const T m = std::max(l0, l1);
    const T e0 = std::exp(l0 - m);
    const T e1 = std::exp(l1 - m);
    const T z = e0 + e1;
    const T p0 = e0 / z;
    const T p1 = e1 / z;
    r.prob_object[static_cast<size_t>(i)] = p1;
    loss -= std::log(static_cast<double>(label == 1 ? p1 : p0));
    r.dlogits[static_cast<int64_t>(i) * 2] = (p0 - (label == 0 ? T(1) : T(0))) / batch;
    r.dlogits[static_cast<int64_t>(i) * 2 + 1] =
        (p1 - (label == 1 ? T(1) : T(0))) / batch;
  }
  r.loss = static_cast<T>(loss / batch);
  return r;
}

// Fixed sequence of layers with a recorded tape.
template <typename T>
class Chain {
 public:
  Chain() = default;
  Chain(Chain&&) noexcept = default;
  Chain& operator=(Chain&&) noexcept = default;

  template <typename L, typename... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> cur = x;
    for (auto& l : layers_) {
      cur = l->forward(cur);
      check_finite(cur, l->kind());
    }
    forwarded_ = true;
    return cur;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    if (!forwarded_) throw StateError("chain: backward before forward");
    Tensor<T> cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      cur = (*it)->backward(cur);
      check_finite(cur, (*it)->kind());
    }
    forwarded_ = false;
    return cur;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& l : layers_)
      for (Param<T>* p : l->params()) out.push_back(p);
    return out;
  }

  void zero_grads() {
    for (Param<T>* p : params()) p->zero_grad();
  }

  size_t size() const { return layers_.size(); }
  Layer<T>* layer(size_t i) { return layers_[i].get(); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  bool forwarded_ = false;
};

}  // namespace boxrank

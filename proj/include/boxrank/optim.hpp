// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "boxrank/error.hpp"
#include "boxrank/layers.hpp"
#include "boxrank/tensor.hpp"

namespace boxrank {

// SGD with classical heavy-ball momentum; weight decay folded into the
// gradient:  v <- mu*v - lr*(g + wd*w);  w <- w + v.
template <typename T>
class SgdOptimizer {
 public:
  SgdOptimizer(T lr, T momentum, T weight_decay)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    if (!(lr > T(0))) throw ConfigError("sgd: lr must be positive");
    if (!(momentum >= T(0) && momentum < T(1)))
      throw ConfigError("sgd: momentum must be in [0, 1)");
    if (!(weight_decay >= T(0)))
      throw ConfigError("sgd: weight decay must be non-negative");
  }

  void set_lr(T lr) {
    if (!(lr > T(0))) throw ConfigError("sgd: lr must be positive");
    lr_ = lr;
  }
  T lr() const { return lr_; }
  T momentum() const { return momentum_; }
  T weight_decay() const { return weight_decay_; }

  // Applies one update using each param's accumulated gradient. Momentum
  // buffers are created lazily and shape-checked on every step.
  void step(const std::vector<Param<T>*>& params) {
    if (velocity_.empty()) {
      velocity_.reserve(params.size());
      for (Param<T>* p : params) velocity_.emplace_back(p->value.shape());
    }
    if (velocity_.size() != params.size())
      throw DimensionError("sgd: parameter count changed between steps");
    for (size_t i = 0; i < params.size(); ++i) {
      Param<T>* p = params[i];
      if (!velocity_[i].same_shape(p->value) ||
          !p->grad.same_shape(p->value))
        throw DimensionError(msg("sgd: shape mismatch for ", p->name));
      detail::Kern<T>::sgd_step(p->value.data(), velocity_[i].data(),
                                p->grad.data(), p->value.size(), lr_,
                                momentum_, weight_decay_);
    }
  }

  std::vector<Tensor<T>>& velocity() { return velocity_; }

 private:
  T lr_, momentum_, weight_decay_;
  std::vector<Tensor<T>> velocity_;
};

}  // namespace boxrank

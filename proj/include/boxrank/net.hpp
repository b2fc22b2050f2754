// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "boxrank/geometry.hpp"
#include "boxrank/image.hpp"
#include "boxrank/layers.hpp"
#include "boxrank/tensor.hpp"

namespace boxrank {

enum class Profile { full, small };

const char* profile_name(Profile p);
Profile profile_from_name(const std::string& name);

// Architecture: conv(11,c1,4) - pool(3,2) - conv(5,c2,1) - fc(f6) - fc(2),
// ReLU after every layer except the last. The full profile is
// (c1,c2,f6) = (96,256,1024); the small profile divides those by 4.
struct NetConfig {
  Profile profile = Profile::full;
  int input_side = 140;
  int conv1_channels = 96;
  int conv2_channels = 256;
  int fc6_width = 1024;
  int conv1_pad = 0;
  int conv2_pad = 2;
  // RoI grid per axis for the shared-feature path. fc6 takes
  // conv2_channels * roi_grid^2 inputs; the crop path additionally
  // requires roi_grid == conv2 output side (16 at input 140).
  int roi_grid = 16;
  uint64_t init_seed = 0;
  double init_std = 0.01;

  static NetConfig make(Profile p, uint64_t seed = 0);

  void validate() const;

  int conv1_out() const { return conv_out_dim(input_side, 11, 4, conv1_pad); }
  int pool_out() const { return conv_out_dim(conv1_out(), 3, 2, 0); }
  int conv2_out() const { return conv_out_dim(pool_out(), 5, 1, conv2_pad); }
  int fc6_inputs() const { return conv2_channels * roi_grid * roi_grid; }
  int total_stride() const { return 4 * 2 * 1; }

  // Canonical key=value serialization; stable field order.
  std::string canonical() const;
  static NetConfig from_canonical(const std::string& text);
  uint64_t hash() const;

  bool operator==(const NetConfig&) const = default;
};

// All learnable tensors plus creation metadata. conv weights are
// [out_c, in_c, k, k]; fc weights are input-major [in, out].
struct NetParams {
  NetConfig config;
  std::array<float, 3> channel_mean{0.0f, 0.0f, 0.0f};
  uint32_t train_stage = 0;  // 0 = untrained, then 1 / 2
  uint64_t iteration = 0;

  Tensor<float> conv1_w, conv1_b;
  Tensor<float> conv2_w, conv2_b;
  Tensor<float> fc6_w, fc6_b;
  Tensor<float> fc7_w, fc7_b;
};

// Gaussian(0, init_std) weights for every layer, zero biases,
// deterministic given config.init_seed.
NetParams build_net(const NetConfig& cfg);

// Little-endian binary checkpoint; round-trips are bit-exact.
void save_checkpoint(const NetParams& params, const std::string& path);
NetParams load_checkpoint(const std::string& path);

// Runtime float net assembled from parameters. Holds a feature chain
// (conv1-relu-pool-conv2-relu) and a classifier chain (fc6-relu-fc7) so the
// crop and shared-feature paths reuse the same pieces.
class Net {
 public:
  explicit Net(const NetParams& params);

  const NetConfig& config() const { return config_; }
  const std::array<float, 3>& channel_mean() const { return mean_; }
  void set_channel_mean(const std::array<float, 3>& m) { mean_ = m; }
  uint32_t train_stage() const { return stage_; }
  void set_train_stage(uint32_t s) { stage_ = s; }
  uint64_t iteration() const { return iter_; }
  void set_iteration(uint64_t i) { iter_ = i; }

  Chain<float>& features() { return features_; }
  Chain<float>& classifier() { return classifier_; }
  std::vector<Param<float>*> params() {
    auto out = features_.params();
    for (auto* p : classifier_.params()) out.push_back(p);
    return out;
  }

  // Crop path: x is [N, 3, S, S] already mean-subtracted; returns logits
  // [N, 2]. Requires roi_grid == conv2 output side.
  Tensor<float> forward_crop(const Tensor<float>& x);

  NetParams snapshot() const;

 private:
  NetConfig config_;
  std::array<float, 3> mean_;
  uint32_t stage_ = 0;
  uint64_t iter_ = 0;
  Chain<float> features_;
  Chain<float> classifier_;
  ConvLayer<float>* conv1_ = nullptr;
  ConvLayer<float>* conv2_ = nullptr;
  FcLayer<float>* fc6_ = nullptr;
  FcLayer<float>* fc7_ = nullptr;
};

// Crop the box region, warp to the configured input side, subtract the
// per-channel dataset mean. Output [1, 3, S, S].
Tensor<float> preprocess_crop(const ImageU8& img, const Box& box,
                              const NetConfig& cfg,
                              const std::array<float, 3>& channel_mean);

// Softmax probability of the object class for a single crop tensor.
float forward_objectness(Net& net, const Tensor<float>& input);

}  // namespace boxrank

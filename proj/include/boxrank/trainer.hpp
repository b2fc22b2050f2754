// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "boxrank/dataio.hpp"
#include "boxrank/net.hpp"
#include "boxrank/optim.hpp"
#include "boxrank/roipool.hpp"
#include "boxrank/sampler.hpp"

namespace boxrank {

struct TrainSchedule {
  int stage = 1;
  int64_t total_iters = 60000;
  int64_t decay_every = 20000;
  int batch = 128;
  double lr0 = 0.001;
  double lr_decay = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int64_t log_every = 20;
  uint64_t seed = 0;

  void validate() const;

  // Shrinks the 60k/20k recipe proportionally (scale 1/30 gives 2000
  // iterations with decays every 667).
  TrainSchedule scaled(double factor) const;
};

double lr_at(int64_t iteration, const TrainSchedule& schedule);

enum class TrainMode { crop, fast };

const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

struct TrainOptions {
  TrainMode mode = TrainMode::fast;
  int images_per_batch = 2;
  ScaleSet scales;
  SamplerConfig sampler;
  // Stage-2 proposal file name under the dataset's proposals directory.
  std::string proposals_name = "baseline";
  // Training-category filter (held-out-category protocol); empty = all.
  std::vector<int> categories;
  // Ablation override: allow stage 2 from an untrained checkpoint.
  bool allow_stage_skip = false;
  // Optional warm-up on exact-gt vs far-background crops before the main
  // loop (stands in for external pretraining; off by default).
  int64_t pretrain_iters = 0;
  // Early exit once the loss EMA falls below this (0 disables); used by
  // capacity checks.
  double stop_loss = 0.0;
  std::string loss_log_path;  // CSV iteration,lr,loss,ema_loss ("" = off)
};

struct LossLogEntry {
  int64_t iteration;
  double lr;
  double loss;
  double ema_loss;
};

struct TrainResult {
  NetParams params;
  std::vector<LossLogEntry> loss_log;
  int64_t iterations_run = 0;
};

// One optimization step on an explicit minibatch. Exposed so capacity
// tests can drive fixed sample sets; train_stage builds on it.
class Trainer {
 public:
  using ImageLookup = std::function<const ImageU8&(const std::string&)>;

  Trainer(Net& net, const TrainSchedule& schedule, TrainMode mode,
          const ScaleSet& scales);

  // Runs forward/backward/update, returns the batch loss. `iteration`
  // selects the learning rate.
  float step(const std::vector<LabeledSample>& batch,
             const ImageLookup& images, int64_t iteration);

 private:
  float run_crop(const std::vector<LabeledSample>& batch,
                 const ImageLookup& images);
  float run_fast(const std::vector<LabeledSample>& batch,
                 const ImageLookup& images);

  Net& net_;
  TrainSchedule schedule_;
  TrainMode mode_;
  ScaleSet scales_;
  SgdOptimizer<float> opt_;
};

// Full stage run over a dataset: sliding-window negatives + perturbed
// positives for stage 1, proposal-labelled pools for stage 2, balanced 1:3
// batches, SGD with the schedule, divergence guard, loss log. Fully
// deterministic for a fixed seed in reference mode (threads = 1).
TrainResult train_stage(const NetParams& init, const Dataset& dataset,
                        const TrainSchedule& schedule,
                        const TrainOptions& options);

// Per-channel mean over every pixel of the training images (0..255 scale).
std::array<float, 3> compute_channel_mean(const Dataset& dataset);

}  // namespace boxrank

// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "boxrank/geometry.hpp"
#include "boxrank/rng.hpp"

namespace boxrank {

struct SamplerConfig {
  // IoU between neighboring sliding windows (controls both the translation
  // step and the scale series).
  double alpha = 0.65;
  // Window aspect ratios as (w : h).
  std::vector<std::pair<double, double>> aspect_ratios{
      {1, 1}, {2, 3}, {1, 3}, {3, 2}, {3, 1}};
  double gamma = 0.2;  // positive-perturbation noise level
  // Stage 1: sliding negatives overlapping any gt by more than neg_iou are
  // discarded; perturbed positives below pos_iou are discarded.
  double stage1_pos_iou = 0.5;
  double stage1_neg_iou = 0.5;
  // Stage 2: >= pos_iou is object, < neg_iou is background, the band
  // in between is discarded.
  double stage2_pos_iou = 0.7;
  double stage2_neg_iou = 0.3;
  int neg_per_pos = 3;
  double min_window_side = 16.0;
  uint64_t seed = 0;

  void validate() const;
};

enum class SampleLabel { object, background };
enum class SampleSource { sliding, perturbed_gt, proposal };

struct LabeledSample {
  std::string image_id;
  Box box;
  SampleLabel label = SampleLabel::background;
  int stage = 1;
  SampleSource source = SampleSource::sliding;
};

// Raster-scan window enumeration. Per aspect ratio, window sizes form a
// geometric series with ratio 1/sqrt(alpha) from min_window_side up to the
// image side; the translation step d = w*(1-alpha)/(1+alpha) makes axis
// neighbors overlap at exactly alpha. The grid overhangs the far border by
// at most one step and is then clipped, so coverage reaches the border.
// Enumeration order: aspect, then scale, then row, then column.
std::vector<Box> gen_sliding_windows(double image_w, double image_h,
                                     const SamplerConfig& cfg);

// Pre-clip version exposed for the neighbor-overlap property: returns the
// unclipped grid for one aspect/scale along with its step sizes.
struct WindowGrid {
  double w = 0, h = 0, step_x = 0, step_y = 0;
  int cols = 0, rows = 0;
  Box at(int row, int col) const {
    return Box{col * step_x, row * step_y, col * step_x + w,
               row * step_y + h};
  }
};
std::vector<WindowGrid> sliding_window_grids(double image_w, double image_h,
                                             const SamplerConfig& cfg);

// Threshold labeling. Stage 1 uses the source: sliding candidates are
// negatives unless they overlap a gt by more than stage1_neg_iou (then
// discarded); perturbed candidates are positives unless below
// stage1_pos_iou (then discarded). Stage 2 ignores the source: object at
// >= stage2_pos_iou, background below stage2_neg_iou, discard between.
std::vector<std::optional<SampleLabel>> label_boxes(
    const std::vector<Box>& boxes, const std::vector<SampleSource>& sources,
    const std::vector<Box>& gts, int stage, const SamplerConfig& cfg);

// Perturb uniformly chosen gt boxes until `count` survivors pass the given
// overlap filter. Throws SamplingError when a draw budget of
// 100 * max(count, 10) is exhausted (gt too small to survive clipping).
std::vector<Box> gen_positives(const std::vector<Box>& gts, int count,
                               const SamplerConfig& cfg, double image_w,
                               double image_h, double pos_iou, Rng& rng);

// Deterministic balanced minibatch stream: round(batch/(1+ratio))
// positives, the rest negatives, drawn without replacement within an epoch
// whenever the pools are large enough, shuffled order.
class BatchComposer {
 public:
  BatchComposer(std::vector<LabeledSample> positives,
                std::vector<LabeledSample> negatives, int batch_size,
                int neg_per_pos, uint64_t seed);

  std::vector<LabeledSample> next_batch();

  int positives_per_batch() const { return pos_per_batch_; }

 private:
  size_t draw(std::vector<size_t>& order, size_t& cursor, size_t n,
              Rng& rng);

  std::vector<LabeledSample> pos_, neg_;
  int batch_, pos_per_batch_;
  std::vector<size_t> pos_order_, neg_order_;
  size_t pos_cursor_ = 0, neg_cursor_ = 0;
  Rng rng_;
};

// Single-shot convenience wrapper over BatchComposer.
std::vector<LabeledSample> compose_batch(
    const std::vector<LabeledSample>& positives,
    const std::vector<LabeledSample>& negatives, int batch_size,
    int neg_per_pos, uint64_t seed);

}  // namespace boxrank

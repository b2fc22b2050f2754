// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace boxrank {

void SamplerConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError(msg("alpha must be in (0,1), got ", alpha));
  if (aspect_ratios.empty()) throw ConfigError("aspect ratio set empty");
  for (const auto& [w, h] : aspect_ratios)
    if (!(w > 0.0 && h > 0.0)) throw ConfigError("aspect ratios must be positive");
  if (!(gamma >= 0.0 && gamma < 0.5))
    throw ConfigError(msg("gamma must be in [0,0.5), got ", gamma));
  if (stage1_neg_iou > stage1_pos_iou || stage2_neg_iou > stage2_pos_iou)
    throw ConfigError("negative threshold must not exceed positive threshold");
  if (neg_per_pos < 1) throw ConfigError("neg:pos ratio must be positive");
  if (!(min_window_side > 0.0))
    throw ConfigError("min window side must be positive");
}

std::vector<WindowGrid> sliding_window_grids(double image_w, double image_h,
                                             const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<WindowGrid> grids;
  if (image_w < cfg.min_window_side || image_h < cfg.min_window_side)
    return grids;
  const double scale_step = 1.0 / std::sqrt(cfg.alpha);
  const double step_ratio = (1.0 - cfg.alpha) / (1.0 + cfg.alpha);
  for (const auto& [aw, ah] : cfg.aspect_ratios) {
    const double r = aw / ah;
    // Smallest window has its shorter side at min_window_side.
    double w = r >= 1.0 ? cfg.min_window_side * r : cfg.min_window_side;
    double h = r >= 1.0 ? cfg.min_window_side : cfg.min_window_side / r;
    for (; w <= image_w && h <= image_h; w *= scale_step, h *= scale_step) {
      WindowGrid g;
      g.w = w;
      g.h = h;
      g.step_x = w * step_ratio;
      g.step_y = h * step_ratio;
      // Last position overhangs by at most one step; callers clip.
      g.cols = static_cast<int>(
                   std::ceil((image_w - w) / g.step_x - 1e-12)) + 1;
      g.rows = static_cast<int>(
                   std::ceil((image_h - h) / g.step_y - 1e-12)) + 1;
      grids.push_back(g);
    }
  }
  return grids;
}

std::vector<Box> gen_sliding_windows(double image_w, double image_h,
                                     const SamplerConfig& cfg) {
  std::vector<Box> out;
  for (const WindowGrid& g : sliding_window_grids(image_w, image_h, cfg)) {
    for (int row = 0; row < g.rows; ++row) {
      for (int col = 0; col < g.cols; ++col) {
        const Box raw = g.at(row, col);
        out.push_back(Box{std::min(raw.x_min, image_w - 1e-6),
                          std::min(raw.y_min, image_h - 1e-6),
                          std::min(raw.x_max, image_w),
                          std::min(raw.y_max, image_h)});
      }
    }
  }
  return out;
}

std::vector<std::optional<SampleLabel>> label_boxes(
    const std::vector<Box>& boxes, const std::vector<SampleSource>& sources,
    const std::vector<Box>& gts, int stage, const SamplerConfig& cfg) {
  cfg.validate();
  if (stage != 1 && stage != 2)
    throw ConfigError(msg("stage must be 1 or 2, got ", stage));
  if (boxes.size() != sources.size())
    throw DimensionError("label_boxes: sources size mismatch");
  std::vector<std::optional<SampleLabel>> out(boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) {
    double max_iou = 0.0;
    for (const Box& gt : gts) max_iou = std::max(max_iou, iou(boxes[i], gt));
    if (stage == 1) {
      if (sources[i] == SampleSource::perturbed_gt) {
        if (max_iou >= cfg.stage1_pos_iou) out[i] = SampleLabel::object;
      } else {
        if (!(max_iou > cfg.stage1_neg_iou)) out[i] = SampleLabel::background;
      }
    } else {
      if (max_iou >= cfg.stage2_pos_iou)
        out[i] = SampleLabel::object;
      else if (max_iou < cfg.stage2_neg_iou)
        out[i] = SampleLabel::background;
    }
  }
  return out;
}

std::vector<Box> gen_positives(const std::vector<Box>& gts, int count,
                               const SamplerConfig& cfg, double image_w,
                               double image_h, double pos_iou, Rng& rng) {
  cfg.validate();
  if (gts.empty()) throw SamplingError("gen_positives: empty gt set");
  std::vector<Box> out;
  if (count <= 0) return out;
  out.reserve(static_cast<size_t>(count));
  const PerturbConfig pcfg{cfg.gamma, cfg.seed};
  const int budget = 100 * std::max(count, 10);
  for (int draws = 0; draws < budget && static_cast<int>(out.size()) < count;
       ++draws) {
    const Box& gt = gts[rng.uniform_int(gts.size())];
    Box p;
    try {
      p = perturb_gt(gt, pcfg, image_w, image_h, rng);
    } catch (const SamplingError&) {
      continue;
    }
    double max_iou = 0.0;
    for (const Box& g : gts) max_iou = std::max(max_iou, iou(p, g));
    if (max_iou >= pos_iou) out.push_back(p);
  }
  if (static_cast<int>(out.size()) < count)
    throw SamplingError(
        msg("gen_positives: only ", out.size(), "/", count,
            " perturbations survived the ", pos_iou, " filter"));
  return out;
}

BatchComposer::BatchComposer(std::vector<LabeledSample> positives,
                             std::vector<LabeledSample> negatives,
                             int batch_size, int neg_per_pos, uint64_t seed)
    : pos_(std::move(positives)), neg_(std::move(negatives)),
      batch_(batch_size), rng_(seed) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (neg_per_pos < 1) throw ConfigError("neg:pos ratio must be positive");
  if (pos_.empty())
    throw SamplingError("compose_batch: empty positive pool");
  if (neg_.empty())
    throw SamplingError("compose_batch: empty negative pool");
  pos_per_batch_ = static_cast<int>(
      std::llround(static_cast<double>(batch_size) / (1.0 + neg_per_pos)));
  pos_per_batch_ = std::max(1, pos_per_batch_);
}

size_t BatchComposer::draw(std::vector<size_t>& order, size_t& cursor,
                           size_t n, Rng& rng) {
  if (cursor >= order.size()) {
    order.resize(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    cursor = 0;
  }
  return order[cursor++];
}

std::vector<LabeledSample> BatchComposer::next_batch() {
  std::vector<LabeledSample> batch;
  batch.reserve(static_cast<size_t>(batch_));
  for (int i = 0; i < pos_per_batch_; ++i)
    batch.push_back(pos_[draw(pos_order_, pos_cursor_, pos_.size(), rng_)]);
  for (int i = pos_per_batch_; i < batch_; ++i)
    batch.push_back(neg_[draw(neg_order_, neg_cursor_, neg_.size(), rng_)]);
  rng_.shuffle(batch);
  return batch;
}

std::vector<LabeledSample> compose_batch(
    const std::vector<LabeledSample>& positives,
    const std::vector<LabeledSample>& negatives, int batch_size,
    int neg_per_pos, uint64_t seed) {
  BatchComposer composer(positives, negatives, batch_size, neg_per_pos, seed);
  return composer.next_batch();
}

}  // namespace boxrank

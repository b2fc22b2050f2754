// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/roipool.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <mutex>

#include "boxrank/parallel.hpp"

namespace boxrank {

FeatureBox project_box(const Box& b, int total_stride, int fm_w, int fm_h) {
  check_box(b, "project_box input");
  if (total_stride < 1) throw ConfigError("total stride must be >= 1");
  const double s = static_cast<double>(total_stride);
  FeatureBox f;
  f.x0 = static_cast<int>(std::floor(b.x_min / s));
  f.y0 = static_cast<int>(std::floor(b.y_min / s));
  f.x1 = static_cast<int>(std::ceil(b.x_max / s));
  f.y1 = static_cast<int>(std::ceil(b.y_max / s));
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
  if (f.y1 <= f.y0) f.y1 = f.y0 + 1;
  if (f.x0 >= fm_w || f.y0 >= fm_h || f.x1 <= 0 || f.y1 <= 0)
    throw GeometryError(msg("box projects outside the ", fm_w, "x", fm_h,
                            " feature map"));
  f.x0 = std::max(f.x0, 0);
  f.y0 = std::max(f.y0, 0);
  f.x1 = std::min(f.x1, fm_w);
  f.y1 = std::min(f.y1, fm_h);
  return f;
}

FeatureBox project_box_clamped(const Box& b, int total_stride, int fm_w,
                               int fm_h) {
  check_box(b, "project_box input");
  const double s = static_cast<double>(total_stride);
  Box c{std::clamp(b.x_min, 0.0, fm_w * s - s),
        std::clamp(b.y_min, 0.0, fm_h * s - s),
        std::clamp(b.x_max, s * 0.5, fm_w * s),
        std::clamp(b.y_max, s * 0.5, fm_h * s)};
  if (!(c.x_max > c.x_min)) c.x_max = c.x_min + 0.5 * s;
  if (!(c.y_max > c.y_min)) c.y_max = c.y_min + 0.5 * s;
  return project_box(c, total_stride, fm_w, fm_h);
}

ScaleChoice select_scale(const Box& b, double image_w, double image_h,
                         const ScaleSet& scales) {
  scales.validate();
  check_box(b, "select_scale box");
  const double short_side = std::min(image_w, image_h);
  if (!(short_side > 0.0)) throw GeometryError("image dims must be positive");
  ScaleChoice best;
  double best_gap = 0.0;
  for (size_t i = 0; i < scales.sizes.size(); ++i) {
    const double f = scales.sizes[i] / short_side;
    const double gap = std::abs(b.area() * f * f - scales.target_area);
    if (i == 0 || gap < best_gap) {
      best_gap = gap;
      best.index = static_cast<int>(i);
      best.factor = f;
    }
  }
  return best;
}

std::vector<float> forward_objectness_fast(Net& net, const ImageU8& image,
                                           const std::vector<Box>& boxes,
                                           const ScaleSet& scales) {
  scales.validate();
  if (!image.valid()) throw GeometryError("fast forward: invalid image");
  const NetConfig& cfg = net.config();
  const RoiGrid grid{cfg.roi_grid, cfg.roi_grid};
  std::vector<float> scores(boxes.size(), 0.0f);
  if (boxes.empty()) return scores;

  // Group boxes by chosen scale.
  std::map<int, std::vector<size_t>> by_scale;
  for (size_t i = 0; i < boxes.size(); ++i) {
    try {
      check_box(boxes[i], "proposal");
      const ScaleChoice c =
          select_scale(boxes[i], image.width, image.height, scales);
      by_scale[c.index].push_back(i);
    } catch (const Error& e) {
      throw GeometryError(msg("box ", i, ": ", e.what()));
    }
  }

  const int fc6_in = cfg.fc6_inputs();
  for (const auto& [scale_idx, group] : by_scale) {
    const double f =
        scales.sizes[static_cast<size_t>(scale_idx)] /
        std::min(image.width, image.height);
    const int sw = std::max(1, static_cast<int>(std::lround(image.width * f)));
    const int sh =
        std::max(1, static_cast<int>(std::lround(image.height * f)));
    Tensor<float> x = warp_region(
        image, Box{0, 0, static_cast<double>(image.width),
                   static_cast<double>(image.height)},
        sw, sh);
    const auto& mean = net.channel_mean();
    const int64_t plane = static_cast<int64_t>(sw) * sh;
    for (int c = 0; c < 3; ++c) {
      float* p = x.data() + c * plane;
      for (int64_t i = 0; i < plane; ++i)
        p[i] -= mean[static_cast<size_t>(c)];
    }
    const Tensor<float> fmap = net.features().forward(x);
    const int fm_h = fmap.dim(2), fm_w = fmap.dim(3);
    const double fx = static_cast<double>(sw) / image.width;
    const double fy = static_cast<double>(sh) / image.height;

    // Pool every box of this group into one batch matrix (disjoint rows,
    // safe to fill in parallel), then run the fc stack in chunks.
    Tensor<float> batch({static_cast<int>(group.size()), fc6_in});
    std::exception_ptr pool_error;
    std::mutex pool_error_mu;
    parallel_for(static_cast<int64_t>(group.size()), [&](int64_t gi) {
      const size_t bi = group[static_cast<size_t>(gi)];
      try {
        const Box& b = boxes[bi];
        const Box scaled{b.x_min * fx, b.y_min * fy, b.x_max * fx,
                         b.y_max * fy};
        const FeatureBox roi =
            project_box_clamped(scaled, cfg.total_stride(), fm_w, fm_h);
        const RoiPooled<float> pooled = roi_maxpool(fmap, roi, grid);
        std::copy(pooled.out.data(), pooled.out.data() + fc6_in,
                  batch.data() + gi * fc6_in);
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(pool_error_mu);
        if (!pool_error)
          pool_error = std::make_exception_ptr(
              GeometryError(msg("box ", bi, ": ", e.what())));
      }
    });
    if (pool_error) std::rethrow_exception(pool_error);

    constexpr int kChunk = 256;
    const int n = static_cast<int>(group.size());
    for (int base = 0; base < n; base += kChunk) {
      const int len = std::min(kChunk, n - base);
      Tensor<float> chunk({len, fc6_in});
      std::copy(batch.data() + static_cast<int64_t>(base) * fc6_in,
                batch.data() + static_cast<int64_t>(base + len) * fc6_in,
                chunk.data());
      const Tensor<float> logits = net.classifier().forward(chunk);
      for (int i = 0; i < len; ++i) {
        const float l0 = logits[static_cast<int64_t>(i) * 2];
        const float l1 = logits[static_cast<int64_t>(i) * 2 + 1];
        const float m = std::max(l0, l1);
        const float e0 = std::exp(l0 - m);
        const float e1 = std::exp(l1 - m);
        scores[group[static_cast<size_t>(base + i)]] = e1 / (e0 + e1);
      }
    }
  }
  return scores;
}

}  // namespace boxrank

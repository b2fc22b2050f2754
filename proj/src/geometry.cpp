// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/geometry.hpp"

#include <algorithm>

namespace boxrank {

void check_box(const Box& b, const char* what) {
  if (!b.valid())
    throw GeometryError(msg(what, " is degenerate: (", b.x_min, ",", b.y_min,
                            ",", b.x_max, ",", b.y_max, ")"));
}

double intersection_area(const Box& a, const Box& b) {
  const double w =
      std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h =
      std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const Box& a, const Box& b) {
  check_box(a, "iou lhs");
  check_box(b, "iou rhs");
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

Box clip_to_image(const Box& b, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0))
    throw GeometryError(msg("image dims must be positive, got ", width, "x",
                            height));
  check_box(b, "clip input");
  Box c{std::clamp(b.x_min, 0.0, width), std::clamp(b.y_min, 0.0, height),
        std::clamp(b.x_max, 0.0, width), std::clamp(b.y_max, 0.0, height)};
  if (!c.valid())
    throw GeometryError(msg("box (", b.x_min, ",", b.y_min, ",", b.x_max, ",",
                            b.y_max, ") degenerate after clipping to ", width,
                            "x", height));
  return c;
}

Box perturb_gt(const Box& gt, const PerturbConfig& cfg, double image_w,
               double image_h, Rng& rng) {
  cfg.validate();
  check_box(gt, "perturb input");
  if (gt.x_min < 0.0 || gt.y_min < 0.0 || gt.x_max > image_w ||
      gt.y_max > image_h)
    throw GeometryError("perturb input box lies outside the image");

  const double w = gt.width();
  const double h = gt.height();
  constexpr int kMaxRetries = 10;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    Box p;
    p.x_min = rng.uniform(gt.x_min - cfg.gamma * w, gt.x_min + cfg.gamma * w);
    p.y_min = rng.uniform(gt.y_min - cfg.gamma * h, gt.y_min + cfg.gamma * h);
    p.x_max = rng.uniform(gt.x_max - cfg.gamma * w, gt.x_max + cfg.gamma * w);
    p.y_max = rng.uniform(gt.y_max - cfg.gamma * h, gt.y_max + cfg.gamma * h);
    p.x_min = std::clamp(p.x_min, 0.0, image_w);
    p.y_min = std::clamp(p.y_min, 0.0, image_h);
    p.x_max = std::clamp(p.x_max, 0.0, image_w);
    p.y_max = std::clamp(p.y_max, 0.0, image_h);
    if (p.valid()) return p;
  }
  throw SamplingError(msg("perturbation of (", gt.x_min, ",", gt.y_min, ",",
                          gt.x_max, ",", gt.y_max,
                          ") degenerate after 10 retries"));
}

}  // namespace boxrank

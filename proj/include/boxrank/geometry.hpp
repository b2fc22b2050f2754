// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "boxrank/error.hpp"
#include "boxrank/rng.hpp"

namespace boxrank {

// Axis-aligned rectangle in continuous pixel coordinates, half-open
// convention: area = (x_max - x_min) * (y_max - y_min), no "+1".
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) &&
           std::isfinite(x_max) && std::isfinite(y_max) && x_min < x_max &&
           y_min < y_max;
  }
};

// Throws GeometryError unless b has finite coordinates and positive area.
void check_box(const Box& b, const char* what = "box");

double intersection_area(const Box& a, const Box& b);

// Intersection over union; symmetric, in [0, 1]. Throws on invalid boxes.
double iou(const Box& a, const Box& b);

// Clamp b into [0,width] x [0,height]. Throws GeometryError if the clipped
// box has no positive area (box entirely outside the image).
Box clip_to_image(const Box& b, double width, double height);

struct PerturbConfig {
  double gamma = 0.2;  // corner noise level, fraction of box width/height
  uint64_t seed = 0;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 0.5))
      throw ConfigError(msg("perturb gamma must be in [0, 0.5), got ", gamma));
  }
};

// Draw each corner coordinate independently and uniformly from
//   x'_min ~ unif(x_min - g*w, x_min + g*w)   (and likewise for the other
// three, height-scaled for y), then clamp to the image. Degenerate results
// are resampled up to 10 times before throwing SamplingError.
// Draw order is fixed (x_min, y_min, x_max, y_max) so streams reproduce.
Box perturb_gt(const Box& gt, const PerturbConfig& cfg, double image_w,
               double image_h, Rng& rng);

}  // namespace boxrank

// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "boxrank/geometry.hpp"
#include "boxrank/net.hpp"
#include "boxrank/tensor.hpp"

namespace boxrank {

// Fixed output grid for RoI max-pooling. Cell sizes vary with the roi; the
// bin count does not, so every box yields the same feature length.
struct RoiGrid {
  int bins_y = 16;
  int bins_x = 16;

  void validate() const {
    if (bins_y < 1 || bins_x < 1)
      throw ConfigError(msg("roi grid must be >= 1 per axis, got ", bins_y,
                            "x", bins_x));
  }
};

// Target sizes for the shortest image side, plus the box area the scale
// selector steers toward.
struct ScaleSet {
  std::vector<double> sizes{400.0, 600.0, 900.0};
  double target_area = 140.0 * 140.0;

  void validate() const {
    if (sizes.empty()) throw ConfigError("scale set must be non-empty");
    for (size_t i = 0; i < sizes.size(); ++i) {
      if (!(sizes[i] > 0.0)) throw ConfigError("scales must be positive");
      if (i > 0 && sizes[i] <= sizes[i - 1])
        throw ConfigError("scales must be sorted ascending");
    }
    if (!(target_area > 0.0))
      throw ConfigError("scale target area must be positive");
  }
};

// Integer bin bounds in feature-map space, half-open.
struct FeatureBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

// start = floor(coord/stride), end = ceil(coord/stride), at least one cell
// per axis, clipped to the feature map. A box projecting fully outside the
// map is a geometry error.
FeatureBox project_box(const Box& b, int total_stride, int fm_w, int fm_h);

// Same projection, but boxes that fall past the map's pixel coverage (the
// conv stack shrinks the map ~2 cells relative to image/stride, so valid
// image boxes near the far border can overshoot) snap to the border cell
// instead of erroring. Scoring and training go through this.
FeatureBox project_box_clamped(const Box& b, int total_stride, int fm_w,
                               int fm_h);

struct ScaleChoice {
  int index = 0;
  double factor = 1.0;  // sizes[index] / min(image_w, image_h)
};

// Picks the scale whose resized box area is closest to target_area; ties go
// to the smaller scale.
ScaleChoice select_scale(const Box& b, double image_w, double image_h,
                         const ScaleSet& scales);

template <typename T>
struct RoiPooled {
  Tensor<T> out;                 // [C, bins_y, bins_x]
  std::vector<int64_t> argmax;   // flat index into the feature-map buffer
};

// Per-bin per-channel max over the roi partition. Bin walls sit at
// floor(i*extent/bins); bins that would be empty replicate the clamped
// start cell. First occurrence wins ties so backward routing is stable.
template <typename T>
RoiPooled<T> roi_maxpool(const Tensor<T>& fmap, const FeatureBox& roi,
                         const RoiGrid& grid) {
  grid.validate();
  if (fmap.rank() != 4 || fmap.dim(0) != 1)
    throw DimensionError("roi_maxpool: feature map must be [1,C,H,W]");
  const int c = fmap.dim(1), h = fmap.dim(2), w = fmap.dim(3);
  if (roi.x0 < 0 || roi.y0 < 0 || roi.x1 > w || roi.y1 > h ||
      roi.x1 <= roi.x0 || roi.y1 <= roi.y0)
    throw GeometryError(msg("roi (", roi.x0, ",", roi.y0, ",", roi.x1, ",",
                            roi.y1, ") invalid for ", w, "x", h,
                            " feature map"));
  const int rh = roi.height(), rw = roi.width();
  RoiPooled<T> r;
  r.out = Tensor<T>({c, grid.bins_y, grid.bins_x});
  r.argmax.resize(static_cast<size_t>(c) * grid.bins_y * grid.bins_x);
  int64_t oi = 0;
  for (int ch = 0; ch < c; ++ch) {
    const int64_t plane = (static_cast<int64_t>(ch)) * h * w;
    const T* p = fmap.data() + plane;
    for (int by = 0; by < grid.bins_y; ++by) {
      int y0 = roi.y0 + static_cast<int>(static_cast<int64_t>(by) * rh /
                                         grid.bins_y);
      int y1 = roi.y0 + static_cast<int>(static_cast<int64_t>(by + 1) * rh /
                                         grid.bins_y);
      if (y1 <= y0) {
        y0 = std::min(y0, roi.y1 - 1);
        y1 = y0 + 1;
      }
      for (int bx = 0; bx < grid.bins_x; ++bx) {
        int x0 = roi.x0 + static_cast<int>(static_cast<int64_t>(bx) * rw /
                                           grid.bins_x);
        int x1 = roi.x0 + static_cast<int>(static_cast<int64_t>(bx + 1) * rw /
                                           grid.bins_x);
        if (x1 <= x0) {
          x0 = std::min(x0, roi.x1 - 1);
          x1 = x0 + 1;
        }
        T best = p[static_cast<int64_t>(y0) * w + x0];
        int64_t bidx = static_cast<int64_t>(y0) * w + x0;
        for (int yy = y0; yy < y1; ++yy) {
          const T* row = p + static_cast<int64_t>(yy) * w;
          for (int xx = x0; xx < x1; ++xx) {
            if (row[xx] > best) {
              best = row[xx];
              bidx = static_cast<int64_t>(yy) * w + xx;
            }
          }
        }
        r.out[oi] = best;
        r.argmax[static_cast<size_t>(oi)] = plane + bidx;
        ++oi;
      }
    }
  }
  return r;
}

// Routes gradient only to argmax positions (accumulating, since bins may
// share cells under the replication rule).
template <typename T>
void roi_maxpool_backward(const Tensor<T>& dout,
                          const std::vector<int64_t>& argmax,
                          Tensor<T>* dfmap) {
  if (static_cast<size_t>(dout.size()) != argmax.size())
    throw DimensionError("roi_maxpool_backward: argmax size mismatch");
  for (int64_t i = 0; i < dout.size(); ++i)
    (*dfmap)[argmax[static_cast<size_t>(i)]] += dout[i];
}

// Shared-feature scoring: one conv pass per needed scale, then per-box
// RoI pooling + the fc stack. Scores come back in input order regardless of
// grouping. Errors are tagged with the offending box index.
std::vector<float> forward_objectness_fast(Net& net, const ImageU8& image,
                                           const std::vector<Box>& boxes,
                                           const ScaleSet& scales);

}  // namespace boxrank

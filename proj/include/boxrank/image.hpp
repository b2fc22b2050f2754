// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boxrank/geometry.hpp"
#include "boxrank/tensor.hpp"

namespace boxrank {

// 8-bit RGB image, interleaved, row-major.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  static ImageU8 filled(int w, int h, uint8_t r, uint8_t g, uint8_t b);

  uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<size_t>(width) * height * 3;
  }
};

ImageU8 load_png(const std::string& path);
void save_png(const ImageU8& img, const std::string& path);

// Bilinear warp of the box region onto an out_w x out_h grid. Output is
// [1, 3, out_h, out_w] RGB in the 0..255 range (no mean subtraction).
// Sample points sit at output pixel centers mapped into the box; source
// coordinates are clamped at the image border. A box equal to the full
// image warped to its own size reproduces the pixels exactly.
Tensor<float> warp_region(const ImageU8& img, const Box& box, int out_w,
                          int out_h);

// Rec.601 luma in [0, 1].
std::vector<float> luma(const ImageU8& img);

// Sobel gradient magnitude of a single-channel map (replicated borders).
std::vector<float> sobel_magnitude(const std::vector<float>& map, int width,
                                   int height);

// Summed-area table with O(1) rectangular sums over integer cell bounds.
class IntegralImage {
 public:
  IntegralImage(const std::vector<float>& map, int width, int height);

  // Sum over cells [x0, x1) x [y0, y1), clamped to the map.
  double box_sum(int x0, int y0, int x1, int y1) const;

  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_, height_;
  std::vector<double> sums_;  // (w+1) x (h+1)
};

}  // namespace boxrank

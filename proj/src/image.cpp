// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "boxrank/error.hpp"

namespace boxrank {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 ImageU8::filled(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

ImageU8 load_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError(msg("cannot open ", path));
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(msg("malformed PNG: ", path));
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit RGB.
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  ImageU8 img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] =
        img.pixels.data() + static_cast<size_t>(y) * img.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_png(const ImageU8& img, const std::string& path) {
  if (!img.valid()) throw GeometryError("save_png: invalid image");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError(msg("cannot write ", path));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(msg("PNG write failed: ", path));
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = const_cast<png_bytep>(
        img.pixels.data() + static_cast<size_t>(y) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<float> warp_region(const ImageU8& img, const Box& box, int out_w,
                          int out_h) {
  if (!img.valid()) throw GeometryError("warp_region: invalid image");
  check_box(box, "warp_region box");
  if (out_w < 1 || out_h < 1)
    throw DimensionError("warp_region: output dims must be positive");

  Tensor<float> out = Tensor<float>::nchw(1, 3, out_h, out_w);
  const double sx = box.width() / out_w;
  const double sy = box.height() / out_h;
  const int w = img.width, h = img.height;
  for (int oy = 0; oy < out_h; ++oy) {
    // Pixel p covers [p, p+1); its center maps to index coordinate p.
    const double fy =
        std::clamp(box.y_min + (oy + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const float wy = static_cast<float>(fy - y0);
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx =
          std::clamp(box.x_min + (ox + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const float wx = static_cast<float>(fx - x0);
      for (int c = 0; c < 3; ++c) {
        const float v00 = img.at(x0, y0, c);
        const float v01 = img.at(x1, y0, c);
        const float v10 = img.at(x0, y1, c);
        const float v11 = img.at(x1, y1, c);
        const float top = v00 + (v01 - v00) * wx;
        const float bottom = v10 + (v11 - v10) * wx;
        out[(static_cast<int64_t>(c) * out_h + oy) * out_w + ox] =
            top + (bottom - top) * wy;
      }
    }
  }
  return out;
}

std::vector<float> luma(const ImageU8& img) {
  std::vector<float> out(static_cast<size_t>(img.width) * img.height);
  for (size_t i = 0; i < out.size(); ++i) {
    const float r = img.pixels[i * 3];
    const float g = img.pixels[i * 3 + 1];
    const float b = img.pixels[i * 3 + 2];
    out[i] = (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
  }
  return out;
}

std::vector<float> sobel_magnitude(const std::vector<float>& map, int width,
                                   int height) {
  if (map.size() != static_cast<size_t>(width) * height)
    throw DimensionError("sobel: map size mismatch");
  std::vector<float> out(map.size());
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return map[static_cast<size_t>(y) * width + x];
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float gx = px(x + 1, y - 1) + 2.0f * px(x + 1, y) +
                       px(x + 1, y + 1) - px(x - 1, y - 1) -
                       2.0f * px(x - 1, y) - px(x - 1, y + 1);
      const float gy = px(x - 1, y + 1) + 2.0f * px(x, y + 1) +
                       px(x + 1, y + 1) - px(x - 1, y - 1) -
                       2.0f * px(x, y - 1) - px(x + 1, y - 1);
      out[static_cast<size_t>(y) * width + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

IntegralImage::IntegralImage(const std::vector<float>& map, int width,
                             int height)
    : width_(width), height_(height) {
  if (map.size() != static_cast<size_t>(width) * height)
    throw DimensionError("integral image: map size mismatch");
  sums_.assign(static_cast<size_t>(width + 1) * (height + 1), 0.0);
  for (int y = 0; y < height; ++y) {
    double row = 0.0;
    for (int x = 0; x < width; ++x) {
      row += map[static_cast<size_t>(y) * width + x];
      sums_[static_cast<size_t>(y + 1) * (width + 1) + x + 1] =
          sums_[static_cast<size_t>(y) * (width + 1) + x + 1] + row;
    }
  }
}

double IntegralImage::box_sum(int x0, int y0, int x1, int y1) const {
  x0 = std::clamp(x0, 0, width_);
  x1 = std::clamp(x1, 0, width_);
  y0 = std::clamp(y0, 0, height_);
  y1 = std::clamp(y1, 0, height_);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const auto s = [&](int x, int y) {
    return sums_[static_cast<size_t>(y) * (width_ + 1) + x];
  };
  return s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0);
}

}  // namespace boxrank

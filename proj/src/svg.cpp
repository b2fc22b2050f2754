// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "boxrank/error.hpp"

namespace boxrank {

namespace {

std::ofstream open_svg(const std::string& path, int w, int h) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(msg("cannot write ", path));
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
     << "\">\n";
  return os;
}

void svg_rect(std::ofstream& os, double x, double y, double w, double h,
              const std::string& stroke, const std::string& fill,
              const std::string& extra = "") {
  os << "<rect x=\"" << fmt_double(x) << "\" y=\"" << fmt_double(y)
     << "\" width=\"" << fmt_double(w) << "\" height=\"" << fmt_double(h)
     << "\" stroke=\"" << stroke << "\" fill=\"" << fill << "\"" << extra
     << "/>\n";
}

}  // namespace

void write_curve_svg(const std::vector<RecallCurve>& curves,
                     const std::string& path) {
  const int W = 640, H = 480, ml = 60, mb = 40, mt = 20, mr = 20;
  std::ofstream os = open_svg(path, W, H);
  svg_rect(os, 0, 0, W, H, "none", "white");
  const double px0 = ml, px1 = W - mr, py0 = H - mb, py1 = mt;
  // Axes.
  os << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px1
     << "\" y2=\"" << py0 << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0
     << "\" y2=\"" << py1 << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 8)
     << "\" font-size=\"14\" text-anchor=\"middle\">proposals</text>\n";
  os << "<text x=\"14\" y=\"" << (H / 2)
     << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 "
        "14 "
     << (H / 2) << ")\">recall</text>\n";
  if (curves.empty()) {
    os << "</svg>\n";
    return;
  }
  const double lmax =
      std::log10(static_cast<double>(std::max(2, curves.front().k_max)));
  const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};
  // Y gridlines.
  for (int i = 0; i <= 10; i += 2) {
    const double y = py0 + (py1 - py0) * (i / 10.0);
    os << "<line x1=\"" << px0 << "\" y1=\"" << fmt_double(y) << "\" x2=\""
       << px1 << "\" y2=\"" << fmt_double(y)
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << (px0 - 8) << "\" y=\"" << fmt_double(y + 4)
       << "\" font-size=\"12\" text-anchor=\"end\">" << fmt_double(i / 10.0)
       << "</text>\n";
  }
  size_t ci = 0;
  for (const auto& c : curves) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[ci % 6]
       << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < c.grid_ks.size(); ++i) {
      const double lx = std::log10(static_cast<double>(c.grid_ks[i]));
      const double x = px0 + (px1 - px0) * (lx / lmax);
      const double y = py0 + (py1 - py0) * c.grid_recall[i];
      os << fmt_double(x) << "," << fmt_double(y) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << (px0 + 10) << "\" y=\""
       << (py1 + 16 + 16 * static_cast<int>(ci)) << "\" font-size=\"12\" fill=\""
       << colors[ci % 6] << "\">IoU=" << fmt_double(c.iou_threshold)
       << " auc_log=" << fmt_double(c.auc_log()) << "</text>\n";
    ++ci;
  }
  // X tick labels at decades.
  for (int64_t d = 1; d <= curves.front().k_max; d *= 10) {
    const double x =
        px0 + (px1 - px0) * (std::log10(static_cast<double>(d)) / lmax);
    os << "<text x=\"" << fmt_double(x) << "\" y=\"" << (py0 + 16)
       << "\" font-size=\"12\" text-anchor=\"middle\">" << d << "</text>\n";
  }
  os << "</svg>\n";
}

void write_density_svg(int image_w, int image_h,
                       const std::vector<Box>& proposals, int top_n,
                       const std::string& path) {
  std::ofstream os = open_svg(path, image_w, image_h);
  svg_rect(os, 0, 0, image_w, image_h, "none", "#202020");
  const int n = std::min<int>(top_n, static_cast<int>(proposals.size()));
  for (int i = 0; i < n; ++i) {
    const Box& b = proposals[static_cast<size_t>(i)];
    svg_rect(os, b.x_min, b.y_min, b.width(), b.height(), "none", "red",
             " fill-opacity=\"0.06\"");
  }
  os << "</svg>\n";
}

void write_hitmiss_svg(int image_w, int image_h,
                       const std::vector<HitRecord>& records,
                       const std::string& path) {
  std::ofstream os = open_svg(path, image_w, image_h);
  svg_rect(os, 0, 0, image_w, image_h, "none", "#202020");
  for (const auto& r : records) {
    if (r.hit_rank != kMiss) {
      svg_rect(os, r.best_box.x_min, r.best_box.y_min, r.best_box.width(),
               r.best_box.height(), "#4477ff", "none",
               " stroke-width=\"1.5\"");
      svg_rect(os, r.gt.x_min, r.gt.y_min, r.gt.width(), r.gt.height(),
               "#33cc33", "none", " stroke-width=\"2\"");
    } else {
      svg_rect(os, r.gt.x_min, r.gt.y_min, r.gt.width(), r.gt.height(),
               "#ee3333", "none", " stroke-width=\"2\"");
    }
  }
  os << "</svg>\n";
}

}  // namespace boxrank

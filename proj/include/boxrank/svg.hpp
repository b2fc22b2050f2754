// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "boxrank/evalkit.hpp"
#include "boxrank/geometry.hpp"

namespace boxrank {

// Minimal deterministic SVG emission for the report artifacts.

// Recall vs proposals (log10 x-axis), one polyline per threshold.
void write_curve_svg(const std::vector<RecallCurve>& curves,
                     const std::string& path);

// Fig-style proposal-density overlay: translucent red rectangle per
// proposal (top-n only).
void write_density_svg(int image_w, int image_h,
                       const std::vector<Box>& proposals, int top_n,
                       const std::string& path);

// Hits in green with their best-overlapping proposal in blue, misses in red.
void write_hitmiss_svg(int image_w, int image_h,
                       const std::vector<HitRecord>& records,
                       const std::string& path);

}  // namespace boxrank

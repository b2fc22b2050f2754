// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "boxrank/roipool.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace boxrank;

TEST_SUITE_BEGIN("roipool");

TEST_CASE("project_box floor/ceil arithmetic") {
  const FeatureBox a = project_box(Box{16, 16, 80, 80}, 8, 32, 32);
  CHECK(a.x0 == 2);
  CHECK(a.y0 == 2);
  CHECK(a.x1 == 10);
  CHECK(a.y1 == 10);

  const FeatureBox b = project_box(Box{0, 0, 8, 8}, 8, 32, 32);
  CHECK(b.x0 == 0);
  CHECK(b.x1 == 1);
  CHECK(b.y1 == 1);

  const FeatureBox c = project_box(Box{3, 3, 5, 5}, 8, 32, 32);
  CHECK(c.x0 == 0);
  CHECK(c.x1 == 1);
  CHECK(c.y0 == 0);
  CHECK(c.y1 == 1);

  CHECK_THROWS_AS(project_box(Box{300, 300, 320, 320}, 8, 16, 16),
                  GeometryError);
}

TEST_CASE("project_box_clamped snaps overshooting boxes to the border") {
  // Valid image box beyond the map's pixel coverage (16 cells * 8 = 128).
  const FeatureBox f = project_box_clamped(Box{130, 60, 140, 70}, 8, 16, 16);
  CHECK(f.x0 == 15);
  CHECK(f.x1 == 16);
  CHECK(f.y0 == 7);
}

TEST_CASE("select_scale picks the closest-area scale, ties to smaller") {
  ScaleSet scales;  // 400/600/900, A* = 19600
  // 50x50 box, shortest side 500: candidate areas 1600/3600/8100.
  const ScaleChoice c =
      select_scale(Box{0, 0, 50, 50}, 800, 500, scales);
  CHECK(c.index == 2);
  CHECK(c.factor == doctest::Approx(900.0 / 500.0));

  // Exact hit: whole 280x280 image at scale 140 has area 140^2.
  ScaleSet aligned;
  aligned.sizes = {140, 600};
  const ScaleChoice e = select_scale(Box{0, 0, 280, 280}, 280, 280, aligned);
  CHECK(e.index == 0);

  ScaleSet single;
  single.sizes = {333};
  CHECK(select_scale(Box{0, 0, 10, 10}, 100, 100, single).index == 0);

  ScaleSet unsorted;
  unsorted.sizes = {600, 400};
  CHECK_THROWS_AS(select_scale(Box{0, 0, 10, 10}, 100, 100, unsorted),
                  ConfigError);
}

TEST_CASE("roi over the whole map with a matching grid is the identity") {
  Rng rng(41);
  const auto fmap = testutil::random_tensor<float>(rng, {1, 3, 16, 16});
  const auto r = roi_maxpool(fmap, FeatureBox{0, 0, 16, 16}, RoiGrid{16, 16});
  CHECK(r.out.shape() == std::vector<int>{3, 16, 16});
  CHECK(r.out.raw() == fmap.raw());
}

TEST_CASE("1x1 grid is the per-channel global max over the roi") {
  Rng rng(43);
  const auto fmap = testutil::random_tensor<float>(rng, {1, 4, 9, 9});
  const FeatureBox roi{2, 3, 7, 8};
  const auto r = roi_maxpool(fmap, roi, RoiGrid{1, 1});
  for (int c = 0; c < 4; ++c) {
    float best = -1e30f;
    for (int y = roi.y0; y < roi.y1; ++y)
      for (int x = roi.x0; x < roi.x1; ++x)
        best = std::max(best, fmap[(c * 9 + y) * 9 + x]);
    CHECK(r.out[c] == best);
  }
}

TEST_CASE("roi pooling matches the brute-force oracle") {
  Rng rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    const int h = 4 + static_cast<int>(rng.uniform_int(10));
    const int w = 4 + static_cast<int>(rng.uniform_int(10));
    const int c = 1 + static_cast<int>(rng.uniform_int(3));
    const auto fmap = testutil::random_tensor<float>(rng, {1, c, h, w});
    const int x0 = static_cast<int>(rng.uniform_int(w - 1));
    const int y0 = static_cast<int>(rng.uniform_int(h - 1));
    const int x1 = x0 + 1 + static_cast<int>(rng.uniform_int(w - x0));
    const int y1 = y0 + 1 + static_cast<int>(rng.uniform_int(h - y0));
    const RoiGrid grid{1 + static_cast<int>(rng.uniform_int(6)),
                       1 + static_cast<int>(rng.uniform_int(6))};
    const auto got = roi_maxpool(fmap, FeatureBox{x0, y0, x1, y1}, grid);
    const auto ref = oracle::roi_maxpool(fmap, x0, y0, x1, y1, grid.bins_y,
                                         grid.bins_x);
    CHECK(got.out.raw() == ref.raw());
  }
  const auto fmap = testutil::random_tensor<float>(rng, {1, 1, 4, 4});
  CHECK_THROWS_AS(roi_maxpool(fmap, FeatureBox{0, 0, 0, 1}, RoiGrid{2, 2}),
                  GeometryError);
  CHECK_THROWS_AS(roi_maxpool(fmap, FeatureBox{0, 0, 5, 2}, RoiGrid{2, 2}),
                  GeometryError);
}

TEST_CASE("bin partition covers the roi without overlap") {
  Rng rng(53);
  for (int trial = 0; trial < 40; ++trial) {
    const int rh = 1 + static_cast<int>(rng.uniform_int(12));
    const int bins = 1 + static_cast<int>(rng.uniform_int(8));
    // Recompute the wall positions used by the pooler.
    std::vector<int> starts, ends;
    for (int i = 0; i < bins; ++i) {
      starts.push_back(static_cast<int>(static_cast<int64_t>(i) * rh / bins));
      ends.push_back(
          static_cast<int>(static_cast<int64_t>(i + 1) * rh / bins));
    }
    CHECK(starts.front() == 0);
    CHECK(ends.back() == rh);
    for (int i = 1; i < bins; ++i) CHECK(starts[i] == ends[i - 1]);
  }
}

TEST_CASE("roi pooling backward matches finite differences") {
  Rng rng(59);
  Tensor<double> fmap({1, 2, 6, 6});
  {
    std::vector<int64_t> order(static_cast<size_t>(fmap.size()));
    for (int64_t i = 0; i < fmap.size(); ++i)
      order[static_cast<size_t>(i)] = i;
    rng.shuffle(order);
    for (int64_t i = 0; i < fmap.size(); ++i)
      fmap[order[static_cast<size_t>(i)]] = 0.0173 * i - 0.4;
  }
  const FeatureBox roi{1, 0, 5, 6};
  const RoiGrid grid{3, 2};
  const auto r0 = roi_maxpool(fmap, roi, grid);
  const auto proj = testutil::random_tensor<double>(rng, r0.out.shape());
  auto loss = [&]() {
    const auto r = roi_maxpool(fmap, roi, grid);
    double s = 0.0;
    for (int64_t i = 0; i < r.out.size(); ++i) s += r.out[i] * proj[i];
    return s;
  };
  Tensor<double> dfmap(fmap.shape());
  roi_maxpool_backward(proj, r0.argmax, &dfmap);
  CHECK(testutil::fd_max_rel_err(fmap.data(), dfmap.data(), fmap.size(),
                                 loss) < 1e-3);
}

TEST_CASE("fast path gives duplicate boxes identical scores") {
  NetParams p = build_net(NetConfig::make(Profile::small, 21));
  Net net(p);
  Rng rng(61);
  ImageU8 img;
  img.width = 320;
  img.height = 240;
  img.pixels.resize(static_cast<size_t>(320) * 240 * 3);
  for (auto& v : img.pixels) v = static_cast<uint8_t>(rng.uniform_int(256));
  const std::vector<Box> boxes{Box{40, 40, 120, 120}, Box{40, 40, 120, 120},
                               Box{10, 10, 300, 230}, Box{200, 60, 280, 200}};
  ScaleSet scales;
  const auto scores = forward_objectness_fast(net, img, boxes, scales);
  CHECK(scores[0] == scores[1]);
  for (float s : scores) {
    CHECK(s >= 0.0f);
    CHECK(s <= 1.0f);
  }
}

TEST_CASE("fast path scores are permutation-equivariant") {
  NetParams p = build_net(NetConfig::make(Profile::small, 23));
  Net net(p);
  Rng rng(67);
  ImageU8 img;
  img.width = 300;
  img.height = 220;
  img.pixels.resize(static_cast<size_t>(300) * 220 * 3);
  for (auto& v : img.pixels) v = static_cast<uint8_t>(rng.uniform_int(256));
  std::vector<Box> boxes;
  for (int i = 0; i < 12; ++i)
    boxes.push_back(testutil::random_box(rng, 300, 220));
  ScaleSet scales;
  const auto base = forward_objectness_fast(net, img, boxes, scales);
  std::vector<Box> rev(boxes.rbegin(), boxes.rend());
  const auto flipped = forward_objectness_fast(net, img, rev, scales);
  for (size_t i = 0; i < boxes.size(); ++i)
    CHECK(base[i] == flipped[boxes.size() - 1 - i]);
}

TEST_SUITE_END();

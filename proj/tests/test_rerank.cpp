// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "boxrank/rerank.hpp"
#include "testutil.hpp"

using namespace boxrank;

namespace {

ImageU8 noise_image(Rng& rng, int w, int h) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(256));
  return img;
}

ProposalSet make_pool(Rng& rng, const std::string& id, int n, int w, int h) {
  ProposalSet p;
  p.image_id = id;
  p.source = "test";
  for (int i = 0; i < n; ++i) {
    p.boxes.push_back(testutil::random_box(rng, w, h));
    p.scores.push_back(1.0 - 0.01 * i);
  }
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("rerank");

TEST_CASE("sorting semantics: scores (0.2, 0.9, 0.5) permute to (1, 2, 0)") {
  const auto perm = rank_by_objectness({0.2f, 0.9f, 0.5f}, 3, 3);
  CHECK(perm == std::vector<int>{1, 2, 0});
  // Unscored tail keeps source order.
  const auto part = rank_by_objectness({0.1f, 0.8f}, 4, 2);
  CHECK(part == std::vector<int>{1, 0, 2, 3});
  // Ties keep source order.
  const auto ties = rank_by_objectness({0.5f, 0.5f, 0.5f}, 3, 3);
  CHECK(ties == std::vector<int>{0, 1, 2});
}

TEST_CASE("top_k zero keeps the input order") {
  Rng rng(7);
  NetParams p = build_net(NetConfig::make(Profile::small, 3));
  Net net(p);
  const ImageU8 img = noise_image(rng, 280, 200);
  const ProposalSet pool = make_pool(rng, "a", 10, 280, 200);
  ScaleSet scales;
  const RerankResult r = rerank(net, img, pool, 0, ScorePath::fast, scales);
  CHECK(r.scored == 0);
  for (int i = 0; i < 10; ++i) CHECK(r.permutation[static_cast<size_t>(i)] == i);
}

TEST_CASE("constant-score model keeps the input order via stable ties") {
  Rng rng(11);
  NetConfig cfg = NetConfig::make(Profile::small, 3);
  NetParams p = build_net(cfg);
  p.conv1_w.fill(0.0f);
  p.conv2_w.fill(0.0f);
  p.fc6_w.fill(0.0f);
  p.fc7_w.fill(0.0f);
  Net net(p);
  const ImageU8 img = noise_image(rng, 300, 240);
  const ProposalSet pool = make_pool(rng, "a", 12, 300, 240);
  ScaleSet scales;
  const RerankResult r = rerank(net, img, pool, -1, ScorePath::fast, scales);
  for (int i = 0; i < 12; ++i) CHECK(r.permutation[static_cast<size_t>(i)] == i);
  for (double s : r.objectness) CHECK(s == doctest::Approx(0.5));
}

TEST_CASE("reranking is a deterministic permutation") {
  Rng rng(13);
  NetParams p = build_net(NetConfig::make(Profile::small, 17));
  Net net(p);
  const ImageU8 img = noise_image(rng, 320, 240);
  const ProposalSet pool = make_pool(rng, "a", 40, 320, 240);
  ScaleSet scales;
  const RerankResult r1 = rerank(net, img, pool, 25, ScorePath::fast, scales);
  const RerankResult r2 = rerank(net, img, pool, 25, ScorePath::fast, scales);
  CHECK(r1.permutation == r2.permutation);
  CHECK(r1.objectness == r2.objectness);

  auto sorted = r1.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 40; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);
  // Scored prefix is sorted descending.
  for (size_t i = 1; i < r1.objectness.size(); ++i)
    CHECK(r1.objectness[i] <= r1.objectness[i - 1]);
  // Unscored tail keeps source order.
  for (size_t i = 26; i < 40; ++i)
    CHECK(r1.permutation[i] > r1.permutation[i - 1]);

  const ProposalSet out = apply_rerank(pool, r1);
  CHECK(out.ranker == "fast");
  CHECK(out.boxes.size() == pool.boxes.size());
  CHECK(out.objectness.size() == 25);
  // Multiset of boxes is preserved.
  auto key = [](const Box& b) { return b.x_min * 1e9 + b.y_min * 1e3 + b.x_max; };
  std::vector<double> ka, kb;
  for (const Box& b : pool.boxes) ka.push_back(key(b));
  for (const Box& b : out.boxes) kb.push_back(key(b));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  CHECK(ka == kb);
}

TEST_CASE("duplicate proposals get equal scores and keep source order") {
  Rng rng(19);
  NetParams p = build_net(NetConfig::make(Profile::small, 29));
  Net net(p);
  const ImageU8 img = noise_image(rng, 280, 220);
  ProposalSet pool;
  pool.image_id = "a";
  const Box b{30, 40, 150, 160};
  pool.boxes = {b, b, b};
  pool.scores = {0.9, 0.8, 0.7};
  ScaleSet scales;
  const RerankResult r = rerank(net, img, pool, -1, ScorePath::fast, scales);
  CHECK(r.objectness[0] == r.objectness[1]);
  CHECK(r.objectness[1] == r.objectness[2]);
  CHECK(r.permutation == std::vector<int>{0, 1, 2});
}

TEST_CASE("crop and fast paths agree on aligned whole-image boxes") {
  Rng rng(23);
  NetConfig cfg = NetConfig::make(Profile::small, 31);
  NetParams p = build_net(cfg);
  Net net(p);
  // Square image, twice the input side: the fast path resizes it to
  // exactly 140x140, the crop path warps the whole-image box to the same.
  const ImageU8 img = noise_image(rng, 280, 280);
  const std::vector<Box> boxes{Box{0, 0, 280, 280}};
  const double diff = score_consistency_check(net, img, boxes);
  CHECK(diff < 1e-5);
}

TEST_CASE("consistency check is exact for a zero-weight model") {
  Rng rng(27);
  NetConfig cfg = NetConfig::make(Profile::small, 1);
  NetParams p = build_net(cfg);
  p.conv1_w.fill(0.0f);
  p.conv2_w.fill(0.0f);
  p.fc6_w.fill(0.0f);
  p.fc7_w.fill(0.0f);
  Net net(p);
  const ImageU8 img = noise_image(rng, 200, 160);
  // Both paths emit exactly 0.5 regardless of alignment.
  const double diff =
      score_consistency_check(net, img, {Box{0, 0, 200, 160}});
  CHECK(diff == 0.0);
}

TEST_SUITE_END();

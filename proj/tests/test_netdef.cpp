// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "boxrank/net.hpp"
#include "boxrank/rng.hpp"
#include "testutil.hpp"

using namespace boxrank;

namespace {

ImageU8 random_image(Rng& rng, int w, int h) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (auto& p : img.pixels)
    p = static_cast<uint8_t>(rng.uniform_int(256));
  return img;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("netdef");

TEST_CASE("warp of the full image at native size copies pixels") {
  Rng rng(31);
  const ImageU8 img = random_image(rng, 12, 9);
  const Tensor<float> t =
      warp_region(img, Box{0, 0, 12, 9}, 12, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 12; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(t[(c * 9 + y) * 12 + x] ==
              static_cast<float>(img.at(x, y, c)));
}

TEST_CASE("bilinear warp matches the hand-computed checkerboard") {
  // 2x2 checkerboard: 0 255 / 255 0, warped to 4x4.
  // Sample x-coords: -0.25, 0.25, 0.75, 1.25 -> clamped 0, .25, .75, 1.
  ImageU8 img;
  img.width = 2;
  img.height = 2;
  img.pixels.assign(12, 0);
  for (int c = 0; c < 3; ++c) {
    img.at(1, 0, c) = 255;
    img.at(0, 1, c) = 255;
  }
  const Tensor<float> t = warp_region(img, Box{0, 0, 2, 2}, 4, 4);
  // Row sample weights per axis: w in {0, .25, .75, 1} against the two
  // source cells. Expected value = 255 * (wx*(1-wy) + (1-wx)*wy).
  const double wv[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const double expect =
          255.0 * (wv[x] * (1.0 - wv[y]) + (1.0 - wv[x]) * wv[y]);
      CHECK(t[y * 4 + x] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("preprocess subtracts the channel mean") {
  ImageU8 img = ImageU8::filled(140, 140, 90, 120, 150);
  NetConfig cfg = NetConfig::make(Profile::small, 1);
  const auto t = preprocess_crop(img, Box{0, 0, 140, 140}, cfg,
                                 {90.0f, 120.0f, 150.0f});
  for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);
  CHECK_THROWS_AS(
      preprocess_crop(img, Box{-1, 0, 50, 50}, cfg, {0, 0, 0}),
      GeometryError);
}

TEST_CASE("build_net full-profile shapes and the 140-pixel chain") {
  NetConfig cfg = NetConfig::make(Profile::full, 7);
  cfg.validate();
  CHECK(cfg.conv1_out() == 33);
  CHECK(cfg.pool_out() == 16);
  CHECK(cfg.conv2_out() == 16);
  CHECK(cfg.fc6_inputs() == 65536);
  CHECK(cfg.total_stride() == 8);
  const NetParams p = build_net(cfg);
  CHECK(p.conv1_w.shape() == std::vector<int>{96, 3, 11, 11});
  CHECK(p.conv2_w.shape() == std::vector<int>{256, 96, 5, 5});
  CHECK(p.fc6_w.shape() == std::vector<int>{65536, 1024});
  CHECK(p.fc7_w.shape() == std::vector<int>{1024, 2});
  for (int64_t i = 0; i < p.conv1_b.size(); ++i)
    CHECK(p.conv1_b[i] == 0.0f);
}

TEST_CASE("build_net is deterministic per seed") {
  const NetConfig cfg = NetConfig::make(Profile::small, 42);
  const NetParams a = build_net(cfg);
  const NetParams b = build_net(cfg);
  CHECK(a.conv1_w.raw() == b.conv1_w.raw());
  CHECK(a.fc6_w.raw() == b.fc6_w.raw());
  NetConfig other = cfg;
  other.init_seed = 43;
  CHECK(build_net(other).conv1_w.raw() != a.conv1_w.raw());
}

TEST_CASE("build_net weight scale matches the configured sigma") {
  const NetConfig cfg = NetConfig::make(Profile::small, 5);
  const NetParams p = build_net(cfg);
  double acc = 0.0;
  for (int64_t i = 0; i < p.fc6_w.size(); ++i)
    acc += static_cast<double>(p.fc6_w[i]) * p.fc6_w[i];
  const double stddev = std::sqrt(acc / p.fc6_w.size());
  CHECK(stddev == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("config validation rejects inconsistent profiles") {
  NetConfig cfg = NetConfig::make(Profile::full, 0);
  cfg.conv1_channels = 24;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  NetConfig tiny = NetConfig::make(Profile::small, 0);
  tiny.input_side = 10;
  CHECK_THROWS_AS(tiny.validate(), ConfigError);
}

TEST_CASE("zero weights give objectness 0.5") {
  NetConfig cfg = NetConfig::make(Profile::small, 1);
  cfg.init_std = 1e-30;  // effectively zero
  NetParams p = build_net(cfg);
  p.conv1_w.fill(0.0f);
  p.conv2_w.fill(0.0f);
  p.fc6_w.fill(0.0f);
  p.fc7_w.fill(0.0f);
  Net net(p);
  Rng rng(3);
  const auto x = testutil::random_tensor<float>(rng, {1, 3, 140, 140},
                                                -20.0, 20.0);
  CHECK(forward_objectness(net, x) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("objectness stays in the unit interval and repeats exactly") {
  NetParams p = build_net(NetConfig::make(Profile::small, 9));
  Net net(p);
  Rng rng(5);
  for (int i = 0; i < 3; ++i) {
    const auto x = testutil::random_tensor<float>(rng, {1, 3, 140, 140},
                                                  -50.0, 50.0);
    const float s1 = forward_objectness(net, x);
    const float s2 = forward_objectness(net, x);
    CHECK(s1 >= 0.0f);
    CHECK(s1 <= 1.0f);
    CHECK(s1 == s2);
  }
}

TEST_CASE("crop scores are invariant to batch order") {
  NetParams p = build_net(NetConfig::make(Profile::small, 11));
  Net net(p);
  Rng rng(6);
  const auto a = testutil::random_tensor<float>(rng, {1, 3, 140, 140},
                                                -30.0, 30.0);
  const auto b = testutil::random_tensor<float>(rng, {1, 3, 140, 140},
                                                -30.0, 30.0);
  Tensor<float> ab = Tensor<float>::nchw(2, 3, 140, 140);
  Tensor<float> ba = Tensor<float>::nchw(2, 3, 140, 140);
  const int64_t n = a.size();
  std::copy(a.data(), a.data() + n, ab.data());
  std::copy(b.data(), b.data() + n, ab.data() + n);
  std::copy(b.data(), b.data() + n, ba.data());
  std::copy(a.data(), a.data() + n, ba.data() + n);
  const auto l_ab = net.forward_crop(ab);
  const auto l_ba = net.forward_crop(ba);
  CHECK(l_ab[0] == l_ba[2]);
  CHECK(l_ab[1] == l_ba[3]);
  CHECK(l_ab[2] == l_ba[0]);
  CHECK(l_ab[3] == l_ba[1]);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  NetConfig cfg = NetConfig::make(Profile::small, 77);
  NetParams p = build_net(cfg);
  p.channel_mean = {101.5f, 99.25f, 120.75f};
  p.train_stage = 2;
  p.iteration = 1234567;
  const std::string path = temp_path("boxrank_ckpt_test.dbx");
  save_checkpoint(p, path);
  const NetParams q = load_checkpoint(path);
  CHECK(q.config == p.config);
  CHECK(q.channel_mean == p.channel_mean);
  CHECK(q.train_stage == 2);
  CHECK(q.iteration == 1234567);
  CHECK(q.conv1_w.raw() == p.conv1_w.raw());
  CHECK(q.conv1_b.raw() == p.conv1_b.raw());
  CHECK(q.conv2_w.raw() == p.conv2_w.raw());
  CHECK(q.fc6_w.raw() == p.fc6_w.raw());
  CHECK(q.fc7_w.raw() == p.fc7_w.raw());

  // Same bytes when saved again.
  const std::string path2 = temp_path("boxrank_ckpt_test2.dbx");
  save_checkpoint(q, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("checkpoint loader rejects bad files") {
  const std::string path = temp_path("boxrank_ckpt_bad.dbx");
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  {
    NetParams p = build_net(NetConfig::make(Profile::small, 1));
    save_checkpoint(p, path);
    // Truncate.
    std::filesystem::resize_file(path, 64);
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing_ckpt.dbx")), IoError);
  std::remove(path.c_str());
}

TEST_SUITE_END();

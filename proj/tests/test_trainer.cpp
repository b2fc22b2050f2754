// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "boxrank/trainer.hpp"
#include "testutil.hpp"

using namespace boxrank;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

Dataset tiny_dataset(const std::string& root, int images, uint64_t seed) {
  SynthConfig cfg;
  cfg.num_images = images;
  cfg.width = 160;
  cfg.height = 120;
  cfg.min_objects = 1;
  cfg.max_objects = 2;
  cfg.seed = seed;
  return gen_synthetic(cfg, root, "train");
}

// Small-profile config for the shared-feature path with a 4x4 grid and a
// reduced scale set suited to 160x120 inputs.
NetConfig tiny_net_config(uint64_t seed) {
  NetConfig cfg = NetConfig::make(Profile::small, seed);
  cfg.roi_grid = 4;
  return cfg;
}

ScaleSet tiny_scales() {
  ScaleSet s;
  s.sizes = {100.0, 150.0};
  s.target_area = 70.0 * 70.0;
  return s;
}

TrainOptions tiny_options() {
  TrainOptions opt;
  opt.mode = TrainMode::fast;
  opt.scales = tiny_scales();
  opt.images_per_batch = 2;
  return opt;
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("learning-rate schedule") {
  TrainSchedule s;
  CHECK(lr_at(0, s) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(lr_at(19999, s) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(lr_at(20000, s) == doctest::Approx(0.0001).epsilon(1e-12));
  CHECK(lr_at(45000, s) == doctest::Approx(0.00001).epsilon(1e-12));
  double prev = 1.0;
  for (int64_t it = 0; it < 60000; it += 997) {
    const double lr = lr_at(it, s);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("schedule scaling shrinks the recipe proportionally") {
  TrainSchedule s;
  const TrainSchedule scaled = s.scaled(1.0 / 30.0);
  CHECK(scaled.total_iters == 2000);
  CHECK(scaled.decay_every == 667);
  CHECK_THROWS_AS(s.scaled(-1.0), ConfigError);
  TrainSchedule bad;
  bad.decay_every = 100000;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero iterations leave parameters unchanged") {
  const std::string root = fresh_dir("boxrank_train_zero");
  const Dataset ds = tiny_dataset(root, 3, 2);
  const NetParams init = build_net(tiny_net_config(5));
  TrainSchedule sch;
  sch.total_iters = 0;
  sch.decay_every = 1;
  sch.batch = 8;
  const TrainResult r = train_stage(init, ds, sch, tiny_options());
  CHECK(r.iterations_run == 0);
  CHECK(r.params.conv1_w.raw() == init.conv1_w.raw());
  CHECK(r.params.fc6_w.raw() == init.fc6_w.raw());
}

TEST_CASE("stage 2 without a stage-1 checkpoint is a state error") {
  const std::string root = fresh_dir("boxrank_train_order");
  const Dataset ds = tiny_dataset(root, 3, 3);
  const NetParams init = build_net(tiny_net_config(5));
  TrainSchedule sch;
  sch.stage = 2;
  sch.total_iters = 1;
  sch.decay_every = 1;
  sch.batch = 8;
  CHECK_THROWS_AS(train_stage(init, ds, sch, tiny_options()), StateError);
}

TEST_CASE("short runs are bit-deterministic given the seed") {
  const std::string root = fresh_dir("boxrank_train_det");
  const Dataset ds = tiny_dataset(root, 4, 7);
  const NetParams init = build_net(tiny_net_config(9));
  TrainSchedule sch;
  sch.total_iters = 6;
  sch.decay_every = 6;
  sch.batch = 16;
  sch.seed = 1234;
  const TrainOptions opt = tiny_options();
  const TrainResult a = train_stage(init, ds, sch, opt);
  const TrainResult b = train_stage(init, ds, sch, opt);
  CHECK(a.params.conv1_w.raw() == b.params.conv1_w.raw());
  CHECK(a.params.conv2_w.raw() == b.params.conv2_w.raw());
  CHECK(a.params.fc6_w.raw() == b.params.fc6_w.raw());
  CHECK(a.params.fc7_w.raw() == b.params.fc7_w.raw());
  REQUIRE(a.loss_log.size() == b.loss_log.size());
  for (size_t i = 0; i < a.loss_log.size(); ++i)
    CHECK(a.loss_log[i].loss == b.loss_log[i].loss);
  // A different seed diverges.
  TrainSchedule sch2 = sch;
  sch2.seed = 999;
  const TrainResult c = train_stage(init, ds, sch2, opt);
  CHECK(c.params.fc6_w.raw() != a.params.fc6_w.raw());
}

TEST_CASE("loss trends down over the first 150 iterations") {
  const std::string root = fresh_dir("boxrank_train_slope");
  const Dataset ds = tiny_dataset(root, 10, 21);
  const NetParams init = build_net(tiny_net_config(33));
  TrainSchedule sch;
  sch.total_iters = 150;
  sch.decay_every = 150;
  sch.batch = 24;
  sch.seed = 5;
  sch.log_every = 1;
  const TrainResult r = train_stage(init, ds, sch, tiny_options());
  REQUIRE(r.loss_log.size() >= 100);
  // Least-squares slope of raw loss against iteration.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(r.loss_log.size());
  for (const auto& e : r.loss_log) {
    sx += static_cast<double>(e.iteration);
    sy += e.loss;
    sxx += static_cast<double>(e.iteration) * e.iteration;
    sxy += static_cast<double>(e.iteration) * e.loss;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope < 0.0);
}

TEST_CASE("stage-2 pools come from proposals and keep the band empty") {
  const std::string root = fresh_dir("boxrank_train_stage2");
  const Dataset ds = tiny_dataset(root, 4, 13);
  // Build a proposal file from gt jitter plus background boxes.
  std::vector<ProposalSet> props;
  Rng rng(3);
  for (const auto& ann : ds.annotations()) {
    ProposalSet p;
    p.image_id = ann.image_id;
    for (const auto& o : ann.objects) {
      const Box& g = o.box;
      p.boxes.push_back(g);  // exact positive
      const double w = g.width();
      p.boxes.push_back(Box{g.x_min + 0.05 * w, g.y_min, g.x_max + 0.05 * w,
                            g.y_max});  // near-positive
    }
    for (int i = 0; i < 20; ++i) p.boxes.push_back(testutil::random_box(rng, 160, 120));
    p.scores.resize(p.boxes.size());
    for (size_t i = 0; i < p.scores.size(); ++i)
      p.scores[i] = 1.0 - 0.01 * static_cast<double>(i);
    props.push_back(p);
  }
  ensure_dir(root + "/proposals/train");
  save_proposals(props, Dataset::proposals_path(root, "train", "baseline"));

  NetParams init = build_net(tiny_net_config(17));
  init.train_stage = 1;  // pretend stage 1 ran
  init.channel_mean = {110.0f, 110.0f, 110.0f};
  TrainSchedule sch;
  sch.stage = 2;
  sch.total_iters = 4;
  sch.decay_every = 4;
  sch.batch = 16;
  const TrainResult r = train_stage(init, ds, sch, tiny_options());
  CHECK(r.iterations_run == 4);
  CHECK(r.params.train_stage == 2);
}

TEST_CASE("capacity: memorizes 64 fixed samples within 500 iterations") {
  const std::string root = fresh_dir("boxrank_train_memorize");
  const Dataset ds = tiny_dataset(root, 16, 31);
  // Fixed memorization set: one exact-gt positive and three far
  // backgrounds per image.
  std::vector<LabeledSample> pos, neg;
  Rng rng(9);
  for (const auto& ann : ds.annotations()) {
    pos.push_back(LabeledSample{ann.image_id, ann.objects[0].box,
                                SampleLabel::object, 1,
                                SampleSource::perturbed_gt});
    int added = 0;
    while (added < 3) {
      const Box b = testutil::random_box(rng, 160, 120);
      double worst = 0.0;
      for (const auto& o : ann.objects) worst = std::max(worst, iou(b, o.box));
      if (worst < 0.1 && b.width() > 15 && b.height() > 15) {
        neg.push_back(LabeledSample{ann.image_id, b, SampleLabel::background,
                                    1, SampleSource::sliding});
        ++added;
      }
    }
  }
  REQUIRE(pos.size() == 16);
  REQUIRE(neg.size() == 48);

  NetParams init = build_net(tiny_net_config(77));
  init.channel_mean = {110.0f, 110.0f, 110.0f};
  Net net(init);
  TrainSchedule sch;
  sch.total_iters = 500;
  sch.decay_every = 500;
  sch.batch = 32;
  Trainer trainer(net, sch, TrainMode::fast, tiny_scales());
  std::map<std::string, ImageU8> cache;
  for (const auto& e : ds.images()) cache[e.id] = ds.load_image(e.id);
  const auto lookup = [&](const std::string& id) -> const ImageU8& {
    return cache.at(id);
  };
  BatchComposer composer(pos, neg, 32, 3, 42);
  double best = 1e9;
  for (int64_t it = 0; it < 500 && best >= 0.3; ++it) {
    const float loss = trainer.step(composer.next_batch(), lookup, it);
    REQUIRE(std::isfinite(loss));
    best = std::min(best, static_cast<double>(loss));
  }
  CHECK(best < 0.3);
}

TEST_SUITE_END();

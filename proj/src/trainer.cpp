// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "boxrank/error.hpp"

namespace boxrank {

void TrainSchedule::validate() const {
  if (stage != 1 && stage != 2)
    throw ConfigError(msg("stage must be 1 or 2, got ", stage));
  if (total_iters < 0) throw ConfigError("total iterations must be >= 0");
  if (decay_every < 1) throw ConfigError("decay interval must be positive");
  if (total_iters > 0 && decay_every > total_iters)
    throw ConfigError("decay interval must not exceed total iterations");
  if (batch < 1) throw ConfigError("batch size must be positive");
  if (!(lr0 > 0.0)) throw ConfigError("initial learning rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw ConfigError("lr decay factor must be in (0,1]");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must be in [0,1)");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (log_every < 1) throw ConfigError("log interval must be positive");
}

TrainSchedule TrainSchedule::scaled(double factor) const {
  if (!(factor > 0.0)) throw ConfigError("schedule scale must be positive");
  TrainSchedule s = *this;
  s.total_iters = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(total_iters * factor)));
  s.decay_every = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(decay_every * factor)));
  if (s.decay_every > s.total_iters) s.decay_every = s.total_iters;
  return s;
}

double lr_at(int64_t iteration, const TrainSchedule& schedule) {
  if (iteration < 0) throw ConfigError("iteration must be >= 0");
  const int64_t decays = iteration / schedule.decay_every;
  return schedule.lr0 * std::pow(schedule.lr_decay,
                                 static_cast<double>(decays));
}

const char* train_mode_name(TrainMode m) {
  return m == TrainMode::crop ? "crop" : "fast";
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "crop") return TrainMode::crop;
  if (name == "fast") return TrainMode::fast;
  throw ConfigError(msg("unknown train mode '", name, "'"));
}

Trainer::Trainer(Net& net, const TrainSchedule& schedule, TrainMode mode,
                 const ScaleSet& scales)
    : net_(net), schedule_(schedule), mode_(mode), scales_(scales),
      opt_(static_cast<float>(schedule.lr0),
           static_cast<float>(schedule.momentum),
           static_cast<float>(schedule.weight_decay)) {
  schedule_.validate();
  scales_.validate();
}

float Trainer::step(const std::vector<LabeledSample>& batch,
                    const ImageLookup& images, int64_t iteration) {
  if (batch.empty()) throw TrainingError("empty batch");
  net_.features().zero_grads();
  net_.classifier().zero_grads();
  const float loss = mode_ == TrainMode::crop ? run_crop(batch, images)
                                              : run_fast(batch, images);
  opt_.set_lr(static_cast<float>(lr_at(iteration, schedule_)));
  auto params = net_.params();
  opt_.step(params);
  return loss;
}

float Trainer::run_crop(const std::vector<LabeledSample>& batch,
                        const ImageLookup& images) {
  const NetConfig& cfg = net_.config();
  const int s = cfg.input_side;
  const int b = static_cast<int>(batch.size());
  Tensor<float> x = Tensor<float>::nchw(b, 3, s, s);
  std::vector<int> labels(static_cast<size_t>(b));
  const int64_t item = static_cast<int64_t>(3) * s * s;
  for (int i = 0; i < b; ++i) {
    const LabeledSample& sample = batch[static_cast<size_t>(i)];
    const Tensor<float> crop = preprocess_crop(
        images(sample.image_id), sample.box, cfg, net_.channel_mean());
    std::copy(crop.data(), crop.data() + item, x.data() + i * item);
    labels[static_cast<size_t>(i)] =
        sample.label == SampleLabel::object ? 1 : 0;
  }
  const Tensor<float> logits = net_.forward_crop(x);
  const auto head = softmax_xent(logits, labels);
  const Tensor<float> dflat = net_.classifier().backward(head.dlogits);
  const int side = cfg.conv2_out();
  net_.features().backward(
      dflat.reshaped({b, cfg.conv2_channels, side, side}));
  return head.loss;
}

float Trainer::run_fast(const std::vector<LabeledSample>& batch,
                        const ImageLookup& images) {
  const NetConfig& cfg = net_.config();
  const RoiGrid grid{cfg.roi_grid, cfg.roi_grid};
  const int fc6_in = cfg.fc6_inputs();
  const int total = static_cast<int>(batch.size());

  // Group samples by (image, scale); each group shares one conv pass.
  std::map<std::pair<std::string, int>, std::vector<size_t>> groups;
  for (size_t i = 0; i < batch.size(); ++i) {
    const ImageU8& img = images(batch[i].image_id);
    const ScaleChoice choice =
        select_scale(batch[i].box, img.width, img.height, scales_);
    groups[{batch[i].image_id, choice.index}].push_back(i);
  }

  double loss_total = 0.0;
  for (const auto& [key, members] : groups) {
    const ImageU8& img = images(key.first);
    const double f = scales_.sizes[static_cast<size_t>(key.second)] /
                     std::min(img.width, img.height);
    const int sw = std::max(1, static_cast<int>(std::lround(img.width * f)));
    const int sh = std::max(1, static_cast<int>(std::lround(img.height * f)));
    Tensor<float> x =
        warp_region(img, Box{0, 0, static_cast<double>(img.width),
                             static_cast<double>(img.height)}, sw, sh);
    const auto& mean = net_.channel_mean();
    const int64_t plane = static_cast<int64_t>(sw) * sh;
    for (int c = 0; c < 3; ++c) {
      float* p = x.data() + c * plane;
      for (int64_t i = 0; i < plane; ++i)
        p[i] -= mean[static_cast<size_t>(c)];
    }
    const Tensor<float> fmap = net_.features().forward(x);
    const int fm_h = fmap.dim(2), fm_w = fmap.dim(3);
    const double fx = static_cast<double>(sw) / img.width;
    const double fy = static_cast<double>(sh) / img.height;

    const int gn = static_cast<int>(members.size());
    Tensor<float> sub({gn, fc6_in});
    std::vector<std::vector<int64_t>> argmaxes(static_cast<size_t>(gn));
    std::vector<int> labels(static_cast<size_t>(gn));
    for (int i = 0; i < gn; ++i) {
      const LabeledSample& sample = batch[members[static_cast<size_t>(i)]];
      const Box scaled{sample.box.x_min * fx, sample.box.y_min * fy,
                       sample.box.x_max * fx, sample.box.y_max * fy};
      const FeatureBox roi =
          project_box_clamped(scaled, cfg.total_stride(), fm_w, fm_h);
      RoiPooled<float> pooled = roi_maxpool(fmap, roi, grid);
      std::copy(pooled.out.data(), pooled.out.data() + fc6_in,
                sub.data() + static_cast<int64_t>(i) * fc6_in);
      argmaxes[static_cast<size_t>(i)] = std::move(pooled.argmax);
      labels[static_cast<size_t>(i)] =
          sample.label == SampleLabel::object ? 1 : 0;
    }

    const Tensor<float> logits = net_.classifier().forward(sub);
    auto head = softmax_xent(logits, labels);
    // softmax_xent normalizes by the sub-batch; rescale so the whole batch
    // averages correctly: d = (p - y)/total.
    const float rescale = static_cast<float>(gn) / total;
    Tensor<float> dlogits = head.dlogits;
    for (int64_t i = 0; i < dlogits.size(); ++i) dlogits[i] *= rescale;
    loss_total += static_cast<double>(head.loss) * gn / total;

    const Tensor<float> dsub = net_.classifier().backward(dlogits);
    Tensor<float> dfmap(fmap.shape());
    for (int i = 0; i < gn; ++i) {
      const float* row = dsub.data() + static_cast<int64_t>(i) * fc6_in;
      const auto& am = argmaxes[static_cast<size_t>(i)];
      for (int j = 0; j < fc6_in; ++j)
        dfmap[am[static_cast<size_t>(j)]] += row[j];
    }
    net_.features().backward(dfmap);
  }
  return static_cast<float>(loss_total);
}

std::array<float, 3> compute_channel_mean(const Dataset& dataset) {
  double sums[3] = {0.0, 0.0, 0.0};
  int64_t count = 0;
  for (const auto& entry : dataset.images()) {
    const ImageU8 img = dataset.load_image(entry.id);
    const int64_t pixels = static_cast<int64_t>(img.width) * img.height;
    for (int64_t i = 0; i < pixels; ++i) {
      sums[0] += img.pixels[static_cast<size_t>(i) * 3];
      sums[1] += img.pixels[static_cast<size_t>(i) * 3 + 1];
      sums[2] += img.pixels[static_cast<size_t>(i) * 3 + 2];
    }
    count += pixels;
  }
  if (count == 0) throw DataError("channel mean over an empty dataset");
  return {static_cast<float>(sums[0] / count),
          static_cast<float>(sums[1] / count),
          static_cast<float>(sums[2] / count)};
}

namespace {

// Bounded decoded-image cache (images are revisited across iterations).
class ImageCache {
 public:
  explicit ImageCache(const Dataset& ds) : ds_(ds) {}

  const ImageU8& get(const std::string& id) {
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 48) cache_.clear();
    return cache_.emplace(id, ds_.load_image(id)).first->second;
  }

 private:
  const Dataset& ds_;
  std::map<std::string, ImageU8> cache_;
};

struct ImageTrainData {
  std::string id;
  int width = 0, height = 0;
  std::vector<Box> gts;          // category-filtered
  // Stage 2 pools, labelled once up front.
  std::vector<Box> hard_pos;
  std::vector<Box> hard_neg;
};

std::vector<Box> filtered_gts(const ImageAnnotations& ann,
                              const std::vector<int>& categories) {
  std::vector<Box> out;
  for (const auto& o : ann.objects) {
    if (!categories.empty() &&
        std::find(categories.begin(), categories.end(), o.category) ==
            categories.end())
      continue;
    out.push_back(o.box);
  }
  return out;
}

}  // namespace

TrainResult train_stage(const NetParams& init, const Dataset& dataset,
                        const TrainSchedule& schedule,
                        const TrainOptions& options) {
  schedule.validate();
  options.sampler.validate();
  options.scales.validate();
  if (options.images_per_batch < 1)
    throw ConfigError("images per batch must be >= 1");
  if (schedule.stage == 2 && init.train_stage < 1 &&
      !options.allow_stage_skip)
    throw StateError(
        "stage 2 requires a stage-1 checkpoint (pass the explicit override "
        "to skip)");

  Net net(init);
  if (schedule.stage == 1)
    net.set_channel_mean(compute_channel_mean(dataset));

  const SamplerConfig& scfg = options.sampler;
  std::vector<ImageTrainData> data;
  for (const auto& entry : dataset.images()) {
    ImageTrainData d;
    d.id = entry.id;
    d.width = entry.width;
    d.height = entry.height;
    d.gts = filtered_gts(dataset.annotations_for(entry.id),
                         options.categories);
    data.push_back(std::move(d));
  }

  if (schedule.stage == 2) {
    const std::string path = Dataset::proposals_path(
        dataset.root(), dataset.split(), options.proposals_name);
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < data.size(); ++i) index[data[i].id] = i;
    for (const auto& pset : load_proposals(path)) {
      const auto it = index.find(pset.image_id);
      if (it == index.end())
        throw DataError(msg("proposals reference unknown image ",
                            pset.image_id));
      ImageTrainData& d = data[it->second];
      std::vector<SampleSource> sources(pset.boxes.size(),
                                        SampleSource::proposal);
      const auto labels = label_boxes(pset.boxes, sources, d.gts, 2, scfg);
      for (size_t i = 0; i < pset.boxes.size(); ++i) {
        const Box& b = pset.boxes[i];
        if (b.x_min < 0 || b.y_min < 0 || b.x_max > d.width ||
            b.y_max > d.height)
          continue;
        if (!labels[i].has_value()) continue;
        if (*labels[i] == SampleLabel::object)
          d.hard_pos.push_back(b);
        else
          d.hard_neg.push_back(b);
      }
    }
  }

  // One sliding-window grid per distinct image size.
  std::map<std::pair<int, int>, std::vector<Box>> window_cache;
  auto windows_for = [&](int w, int h) -> const std::vector<Box>& {
    const auto key = std::make_pair(w, h);
    auto it = window_cache.find(key);
    if (it == window_cache.end())
      it = window_cache
               .emplace(key, gen_sliding_windows(w, h, scfg))
               .first;
    return it->second;
  };

  ImageCache cache(dataset);
  Trainer trainer(net, schedule, options.mode, options.scales);
  const auto lookup = [&](const std::string& id) -> const ImageU8& {
    return cache.get(id);
  };

  const int pos_per_batch = std::max(
      1, static_cast<int>(std::llround(
             schedule.batch / (1.0 + scfg.neg_per_pos))));

  Rng image_stream(derive_seed(schedule.seed, 0xA11CE));
  std::vector<size_t> image_order(data.size());
  size_t image_cursor = image_order.size();  // force initial shuffle
  auto next_image = [&]() -> ImageTrainData& {
    if (image_cursor >= image_order.size()) {
      for (size_t i = 0; i < image_order.size(); ++i) image_order[i] = i;
      image_stream.shuffle(image_order);
      image_cursor = 0;
    }
    return data[image_order[image_cursor++]];
  };

  // Optional warm-up: exact-gt crops vs far background.
  if (options.pretrain_iters > 0) {
    TrainSchedule warm = schedule;
    warm.total_iters = options.pretrain_iters;
    Trainer warm_trainer(net, warm, TrainMode::crop, options.scales);
    for (int64_t it = 0; it < options.pretrain_iters; ++it) {
      Rng rng(derive_seed(schedule.seed, 0xFEED0000ULL + static_cast<uint64_t>(it)));
      std::vector<LabeledSample> batch;
      const int half = std::max(2, schedule.batch / 4);
      while (static_cast<int>(batch.size()) < half) {
        ImageTrainData& d = next_image();
        if (d.gts.empty()) continue;
        batch.push_back(LabeledSample{
            d.id, d.gts[rng.uniform_int(d.gts.size())],
            SampleLabel::object, 1, SampleSource::perturbed_gt});
      }
      const int need = half * 2;
      int guard = 0;
      while (static_cast<int>(batch.size()) < need && guard++ < 1000) {
        ImageTrainData& d = next_image();
        const double w = rng.uniform(20.0, d.width / 2.0);
        const double h = rng.uniform(20.0, d.height / 2.0);
        const double x0 = rng.uniform(0.0, d.width - w);
        const double y0 = rng.uniform(0.0, d.height - h);
        const Box b{x0, y0, x0 + w, y0 + h};
        double max_iou = 0.0;
        for (const Box& g : d.gts) max_iou = std::max(max_iou, iou(b, g));
        if (max_iou < 0.1)
          batch.push_back(LabeledSample{d.id, b, SampleLabel::background, 1,
                                        SampleSource::sliding});
      }
      warm_trainer.step(batch, lookup, it);
    }
  }

  TrainResult result;
  double ema = 0.0;
  bool ema_init = false;
  for (int64_t iter = 0; iter < schedule.total_iters; ++iter) {
    Rng rng(derive_seed(schedule.seed, 0xB0000000ULL + static_cast<uint64_t>(iter)));
    std::vector<LabeledSample> pos_pool, neg_pool;
    int attempts = 0;
    while (pos_pool.empty() || neg_pool.empty()) {
      if (++attempts > 10)
        throw TrainingError(msg("iteration ", iter,
                                ": could not assemble a batch (empty pools)"));
      pos_pool.clear();
      neg_pool.clear();
      for (int gi = 0; gi < options.images_per_batch; ++gi) {
        ImageTrainData& d = next_image();
        if (schedule.stage == 1) {
          const auto& windows = windows_for(d.width, d.height);
          for (const Box& w : windows) {
            double max_iou = 0.0;
            for (const Box& g : d.gts) max_iou = std::max(max_iou, iou(w, g));
            if (!(max_iou > scfg.stage1_neg_iou))
              neg_pool.push_back(LabeledSample{d.id, w,
                                               SampleLabel::background, 1,
                                               SampleSource::sliding});
          }
          if (!d.gts.empty()) {
            try {
              const auto perturbed = gen_positives(
                  d.gts, 2 * pos_per_batch, scfg, d.width, d.height,
                  scfg.stage1_pos_iou, rng);
              for (const Box& p : perturbed)
                pos_pool.push_back(LabeledSample{d.id, p,
                                                 SampleLabel::object, 1,
                                                 SampleSource::perturbed_gt});
            } catch (const SamplingError&) {
              // This image's gt cannot survive the filter; other images in
              // the group still supply positives.
            }
          }
        } else {
          for (const Box& b : d.hard_pos)
            pos_pool.push_back(LabeledSample{d.id, b, SampleLabel::object, 2,
                                             SampleSource::proposal});
          for (const Box& b : d.hard_neg)
            neg_pool.push_back(LabeledSample{d.id, b,
                                             SampleLabel::background, 2,
                                             SampleSource::proposal});
          // Too few hard positives: top up with perturbed gt under the
          // stage-2 filter so the 1:3 ratio stays feasible.
          if (static_cast<int>(d.hard_pos.size()) < pos_per_batch &&
              !d.gts.empty()) {
            try {
              const auto perturbed = gen_positives(
                  d.gts, pos_per_batch, scfg, d.width, d.height,
                  scfg.stage2_pos_iou, rng);
              for (const Box& p : perturbed)
                pos_pool.push_back(LabeledSample{d.id, p,
                                                 SampleLabel::object, 2,
                                                 SampleSource::perturbed_gt});
            } catch (const SamplingError&) {
            }
          }
        }
      }
    }

    BatchComposer composer(std::move(pos_pool), std::move(neg_pool),
                           schedule.batch, scfg.neg_per_pos,
                           derive_seed(schedule.seed,
                                       0xC0000000ULL + static_cast<uint64_t>(iter)));
    const std::vector<LabeledSample> batch = composer.next_batch();
    const float loss = trainer.step(batch, lookup, iter);
    if (!std::isfinite(loss))
      throw TrainingError(msg("divergence: non-finite loss at iteration ",
                              iter));
    if (!ema_init) {
      ema = loss;
      ema_init = true;
    } else {
      ema = 0.99 * ema + 0.01 * loss;
    }
    if (iter % schedule.log_every == 0 || iter + 1 == schedule.total_iters)
      result.loss_log.push_back(
          LossLogEntry{iter, lr_at(iter, schedule), loss, ema});
    result.iterations_run = iter + 1;
    if (options.stop_loss > 0.0 && ema < options.stop_loss) break;
  }

  net.set_train_stage(static_cast<uint32_t>(schedule.stage));
  net.set_iteration(static_cast<uint64_t>(result.iterations_run));
  result.params = net.snapshot();

  if (!options.loss_log_path.empty()) {
    std::ofstream os(options.loss_log_path, std::ios::trunc);
    if (!os) throw IoError(msg("cannot write ", options.loss_log_path));
    os << "iteration,lr,loss,ema_loss\n";
    for (const auto& e : result.loss_log)
      os << e.iteration << "," << e.lr << "," << e.loss << "," << e.ema_loss
         << "\n";
  }
  return result;
}

}  // namespace boxrank

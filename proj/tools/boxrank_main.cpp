// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
//
// boxrank: synthetic scenes -> bottom-up proposals -> learned objectness
// reranking -> recall/AUC reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "boxrank/dataio.hpp"
#include "boxrank/evalkit.hpp"
#include "boxrank/kernels.hpp"
#include "boxrank/manifest.hpp"
#include "boxrank/net.hpp"
#include "boxrank/parallel.hpp"
#include "boxrank/rerank.hpp"
#include "boxrank/roipool.hpp"
#include "boxrank/sampler.hpp"
#include "boxrank/svg.hpp"
#include "boxrank/trainer.hpp"
#include "boxrank/version.hpp"

namespace fs = std::filesystem;
using namespace boxrank;
using nlohmann::json;

namespace {

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

RunManifest base_manifest(const std::string& command, int argc, char** argv,
                          uint64_t seed, int threads) {
  RunManifest m;
  m.command = command;
  m.tool_version = kVersion;
  for (int i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);
  m.seed = seed;
  m.threads = threads;
  m.kernel_isa = kern::active_name();
  return m;
}

ScaleSet make_scales(const std::string& csv, double target_area) {
  ScaleSet s;
  if (!csv.empty()) s.sizes = parse_doubles(csv);
  if (target_area > 0) s.target_area = target_area;
  s.validate();
  return s;
}

struct EvalCliArgs {
  std::string data, split = "test", proposals = "baseline", out;
  std::string ious = "0.7";
  int k_max = 1000;
  int k_fixed = 1000;
  double max_gt_area = 0.0;
  std::string holdout;
};

void add_eval_flags(CLI::App* cmd, EvalCliArgs& a) {
  cmd->add_option("--data", a.data, "dataset root directory")->required();
  cmd->add_option("--split", a.split, "dataset split name");
  cmd->add_option("--proposals", a.proposals,
                  "proposal file name under proposals/<split>/");
  cmd->add_option("--iou", a.ious,
                  "comma-separated IoU thresholds for the recall curves");
  cmd->add_option("--k-max", a.k_max, "curve budget (max proposals per image)");
  cmd->add_option("--k-fixed", a.k_fixed,
                  "proposal budget for the recall-vs-IoU sweep");
  cmd->add_option("--max-gt-area", a.max_gt_area,
                  "keep only ground truth with area strictly below this");
  cmd->add_option("--holdout-categories", a.holdout,
                  "comma-separated category ids to evaluate on");
  cmd->add_option("--out", a.out,
                  "report directory (default reports/<split>/<proposals>)");
}

EvalReport run_eval(const EvalCliArgs& a, RunManifest& manifest,
                    std::string* out_dir,
                    std::vector<EvalInstance>* instances_out = nullptr) {
  const Dataset ds = Dataset::open(a.data, a.split);
  const std::string ppath =
      Dataset::proposals_path(a.data, a.split, a.proposals);
  manifest.input_hashes[ppath] = hash_hex(fnv1a_file(ppath));
  const auto proposals = load_proposals(ppath);
  EvalOptions opt;
  opt.thresholds = parse_doubles(a.ious);
  opt.k_max = a.k_max;
  opt.k_fixed = a.k_fixed;
  opt.max_gt_area = a.max_gt_area;
  if (!a.holdout.empty()) opt.category_filter = parse_ints(a.holdout);
  const auto instances = make_instances(ds.annotations(), proposals, opt);
  const EvalReport report = evaluate(instances, opt);
  *out_dir = a.out.empty()
                 ? a.data + "/reports/" + a.split + "/" + a.proposals
                 : a.out;
  json cfg;
  cfg["thresholds"] = opt.thresholds;
  cfg["k_max"] = opt.k_max;
  cfg["k_fixed"] = opt.k_fixed;
  cfg["max_gt_area"] = opt.max_gt_area;
  cfg["holdout_categories"] = opt.category_filter;
  cfg["proposals"] = a.proposals;
  cfg["split"] = a.split;
  manifest.config_json = cfg.dump();
  if (instances_out != nullptr) *instances_out = instances;
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"objectness reranking pipeline"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  int threads = 1;
  std::string kernels = "auto";
  app.add_option("--threads", threads,
                 "worker threads (1 = bitwise-reproducible reference mode)");
  app.add_option("--kernels", kernels, "kernel variant: auto|scalar|avx2");

  // ---- gen-synth -----------------------------------------------------
  SynthConfig synth;
  std::string synth_out, synth_split = "train";
  auto* cmd_synth = app.add_subcommand(
      "gen-synth", "render a synthetic dataset with box annotations");
  cmd_synth->add_option("--out", synth_out, "dataset root directory")
      ->required();
  cmd_synth->add_option("--split", synth_split, "split name");
  cmd_synth->add_option("--images", synth.num_images, "number of images");
  cmd_synth->add_option("--width", synth.width, "image width (>= 100)");
  cmd_synth->add_option("--height", synth.height, "image height (>= 100)");
  cmd_synth->add_option("--min-objects", synth.min_objects,
                        "minimum objects per image");
  cmd_synth->add_option("--max-objects", synth.max_objects,
                        "maximum objects per image");
  cmd_synth->add_option("--categories", synth.category_count,
                        "number of object categories");
  cmd_synth->add_option("--clutter", synth.clutter,
                        "background clutter density");
  cmd_synth->add_option("--seed", synth.seed, "master seed");

  // ---- propose-baseline ----------------------------------------------
  BaselineConfig base;
  std::string base_data, base_split = "train", base_name = "baseline";
  auto* cmd_base = app.add_subcommand(
      "propose-baseline",
      "edge-density sliding-window proposals for every image of a split");
  cmd_base->add_option("--data", base_data, "dataset root")->required();
  cmd_base->add_option("--split", base_split, "split name");
  cmd_base->add_option("--n", base.num_proposals, "proposals per image");
  cmd_base->add_option("--alpha", base.alpha, "window grid density");
  cmd_base->add_option("--min-side", base.min_side, "smallest window side");
  cmd_base->add_option("--nms", base.nms_iou, "NMS IoU threshold");
  cmd_base->add_option("--name", base_name, "output proposal file name");

  // ---- train -----------------------------------------------------------
  struct {
    std::string data, split = "train", init, out, proposals = "baseline";
    std::string mode = "fast", profile = "small", categories;
    std::string scales_csv;
    double target_area = 0.0;
    int stage = 1;
    double scale = 1.0;
    int64_t iters = -1;
    int batch = 128;
    uint64_t seed = 0;
    int roi_grid = 16;
    int input_side = 140;
    int images_per_batch = 2;
    int64_t pretrain = 0;
    bool allow_skip = false;
    std::string loss_log;
  } tr;
  auto* cmd_train = app.add_subcommand(
      "train", "train the objectness net (two-stage procedure)");
  cmd_train->add_option("--data", tr.data, "dataset root")->required();
  cmd_train->add_option("--split", tr.split, "training split");
  cmd_train->add_option("--stage", tr.stage,
                        "1 = sliding-window stage, 2 = hard negatives")
      ->check(CLI::IsMember({1, 2}));
  cmd_train->add_option("--mode", tr.mode, "crop|fast scoring path");
  cmd_train->add_option("--scale", tr.scale,
                        "proportional shrink of the 60k/20k schedule");
  cmd_train->add_option("--iters", tr.iters,
                        "override total iterations (after --scale)");
  cmd_train->add_option("--batch", tr.batch, "minibatch size");
  cmd_train->add_option("--seed", tr.seed, "training seed");
  cmd_train->add_option("--init", tr.init,
                        "initial checkpoint (required for stage 2)");
  cmd_train->add_option("--out", tr.out, "output checkpoint path");
  cmd_train->add_option("--proposals", tr.proposals,
                        "stage-2 proposal file name");
  cmd_train->add_option("--profile", tr.profile, "net profile: small|full");
  cmd_train->add_option("--roi-grid", tr.roi_grid,
                        "RoI grid per axis (16 matches the crop path)");
  cmd_train->add_option("--input-side", tr.input_side, "crop input side");
  cmd_train->add_option("--categories", tr.categories,
                        "train only on these category ids (comma list)");
  cmd_train->add_option("--scales", tr.scales_csv,
                        "fast-path scale set, e.g. 400,600,900");
  cmd_train->add_option("--target-area", tr.target_area,
                        "scale-selection target box area");
  cmd_train->add_option("--images-per-batch", tr.images_per_batch,
                        "images sampled per minibatch");
  cmd_train->add_option("--pretrain-iters", tr.pretrain,
                        "optional warm-up iterations before stage 1");
  cmd_train->add_flag("--allow-stage-skip", tr.allow_skip,
                      "ablation override: stage 2 from a raw init");
  cmd_train->add_option("--loss-log", tr.loss_log,
                        "loss log CSV path (default <out>.loss.csv)");

  // ---- rerank ----------------------------------------------------------
  struct {
    std::string data, split = "test", model, proposals = "baseline", out;
    int top_k = 2048;
    bool all = false;
    std::string path = "fast";
    std::string scales_csv;
    double target_area = 0.0;
  } rr;
  auto* cmd_rerank = app.add_subcommand(
      "rerank", "score a proposal pool and reorder it by objectness");
  cmd_rerank->add_option("--data", rr.data, "dataset root")->required();
  cmd_rerank->add_option("--split", rr.split, "split name");
  cmd_rerank->add_option("--model", rr.model, "checkpoint path")->required();
  cmd_rerank->add_option("--proposals", rr.proposals,
                         "input proposal file name");
  cmd_rerank->add_option("--top-k", rr.top_k, "rerank the top-k proposals");
  cmd_rerank->add_flag("--all", rr.all, "rerank every proposal");
  cmd_rerank->add_option("--path", rr.path, "crop|fast scoring path");
  cmd_rerank->add_option("--out", rr.out,
                         "output proposal file name "
                         "(default <proposals>-rerank-<path>)");
  cmd_rerank->add_option("--scales", rr.scales_csv, "fast-path scale set");
  cmd_rerank->add_option("--target-area", rr.target_area,
                         "scale-selection target box area");

  // ---- eval ------------------------------------------------------------
  EvalCliArgs ev;
  auto* cmd_eval = app.add_subcommand(
      "eval", "recall curves, AUC and summaries for a proposal file");
  add_eval_flags(cmd_eval, ev);

  // ---- report ----------------------------------------------------------
  EvalCliArgs rp;
  int rp_max_images = 32;
  int rp_top_n = 100;
  auto* cmd_report = app.add_subcommand(
      "report", "curve, hit/miss and proposal-density SVGs");
  add_eval_flags(cmd_report, rp);
  cmd_report->add_option("--max-images", rp_max_images,
                         "per-image SVG cap");
  cmd_report->add_option("--top-n", rp_top_n,
                         "proposals per density overlay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    kern::select(kernels);
    set_thread_count(threads);

    if (cmd_synth->parsed()) {
      RunManifest m = base_manifest("gen-synth", argc, argv, synth.seed,
                                    threads);
      PhaseTimer timer(m);
      timer.start("generate");
      gen_synthetic(synth, synth_out, synth_split);
      timer.stop();
      json cfg;
      cfg["images"] = synth.num_images;
      cfg["width"] = synth.width;
      cfg["height"] = synth.height;
      cfg["min_objects"] = synth.min_objects;
      cfg["max_objects"] = synth.max_objects;
      cfg["categories"] = synth.category_count;
      cfg["clutter"] = synth.clutter;
      cfg["split"] = synth_split;
      m.config_json = cfg.dump();
      m.write(Dataset::images_dir(synth_out, synth_split) +
              "/manifest.json");
      std::cout << "gen-synth: " << synth.num_images << " images under "
                << synth_out << " (" << synth_split << ")\n";
    } else if (cmd_base->parsed()) {
      RunManifest m =
          base_manifest("propose-baseline", argc, argv, 0, threads);
      PhaseTimer timer(m);
      const Dataset ds = Dataset::open(base_data, base_split);
      std::vector<ProposalSet> out(ds.images().size());
      timer.start("propose");
      parallel_for(static_cast<int64_t>(ds.images().size()), [&](int64_t i) {
        const auto& entry = ds.images()[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)] =
            baseline_propose(ds.load_image(entry.id), entry.id, base);
      });
      timer.stop();
      ensure_dir(base_data + "/proposals/" + base_split);
      const std::string path =
          Dataset::proposals_path(base_data, base_split, base_name);
      save_proposals(out, path);
      json cfg;
      cfg["n"] = base.num_proposals;
      cfg["alpha"] = base.alpha;
      cfg["min_side"] = base.min_side;
      cfg["nms"] = base.nms_iou;
      cfg["split"] = base_split;
      m.config_json = cfg.dump();
      m.write(path + ".manifest.json");
      std::cout << "propose-baseline: wrote " << path << "\n";
    } else if (cmd_train->parsed()) {
      RunManifest m = base_manifest("train", argc, argv, tr.seed, threads);
      PhaseTimer timer(m);
      const Dataset ds = Dataset::open(tr.data, tr.split);

      TrainSchedule sch;
      sch.stage = tr.stage;
      sch.batch = tr.batch;
      sch.seed = tr.seed;
      sch = sch.scaled(tr.scale);
      if (tr.iters >= 0) {
        sch.total_iters = tr.iters;
        if (sch.decay_every > std::max<int64_t>(1, sch.total_iters))
          sch.decay_every = std::max<int64_t>(1, sch.total_iters);
      }

      TrainOptions opt;
      opt.mode = train_mode_from_name(tr.mode);
      opt.images_per_batch = tr.images_per_batch;
      opt.scales = make_scales(tr.scales_csv, tr.target_area);
      opt.proposals_name = tr.proposals;
      if (!tr.categories.empty()) opt.categories = parse_ints(tr.categories);
      opt.allow_stage_skip = tr.allow_skip;
      opt.pretrain_iters = tr.pretrain;

      NetParams init;
      if (!tr.init.empty()) {
        m.input_hashes[tr.init] = hash_hex(fnv1a_file(tr.init));
        init = load_checkpoint(tr.init);
      } else {
        NetConfig cfg = NetConfig::make(profile_from_name(tr.profile),
                                        tr.seed);
        cfg.roi_grid = tr.roi_grid;
        cfg.input_side = tr.input_side;
        init = build_net(cfg);
      }
      if (tr.out.empty())
        tr.out = tr.data + "/models/stage" + std::to_string(tr.stage) + "_" +
                 tr.mode + ".dbx";
      ensure_dir(fs::path(tr.out).parent_path().string());
      opt.loss_log_path =
          tr.loss_log.empty() ? tr.out + ".loss.csv" : tr.loss_log;

      timer.start("train");
      const TrainResult result = train_stage(init, ds, sch, opt);
      timer.stop();
      save_checkpoint(result.params, tr.out);

      json cfg;
      cfg["stage"] = sch.stage;
      cfg["mode"] = tr.mode;
      cfg["total_iters"] = sch.total_iters;
      cfg["decay_every"] = sch.decay_every;
      cfg["batch"] = sch.batch;
      cfg["lr0"] = sch.lr0;
      cfg["momentum"] = sch.momentum;
      cfg["weight_decay"] = sch.weight_decay;
      cfg["net"] = result.params.config.canonical();
      cfg["scales"] = opt.scales.sizes;
      cfg["categories"] = opt.categories;
      cfg["images_per_batch"] = opt.images_per_batch;
      m.config_json = cfg.dump();
      m.write(tr.out + ".manifest.json");
      const double final_loss =
          result.loss_log.empty() ? 0.0 : result.loss_log.back().ema_loss;
      std::cout << "train: stage " << sch.stage << " (" << tr.mode << ", "
                << result.iterations_run << " iters) -> " << tr.out
                << "  ema_loss=" << final_loss << "\n";
    } else if (cmd_rerank->parsed()) {
      RunManifest m = base_manifest("rerank", argc, argv, 0, threads);
      PhaseTimer timer(m);
      const Dataset ds = Dataset::open(rr.data, rr.split);
      m.input_hashes[rr.model] = hash_hex(fnv1a_file(rr.model));
      const NetParams params = load_checkpoint(rr.model);
      const std::string in_path =
          Dataset::proposals_path(rr.data, rr.split, rr.proposals);
      m.input_hashes[in_path] = hash_hex(fnv1a_file(in_path));
      const auto pools = load_proposals(in_path);
      const ScorePath path = score_path_from_name(rr.path);
      const ScaleSet scales = make_scales(rr.scales_csv, rr.target_area);
      const int top_k = rr.all ? -1 : rr.top_k;

      Net net(params);
      std::vector<ProposalSet> out;
      out.reserve(pools.size());
      timer.start("rerank");
      for (const auto& pool : pools) {
        if (!ds.has_image(pool.image_id))
          throw DataError(msg("proposals reference unknown image ",
                              pool.image_id));
        const ImageU8 img = ds.load_image(pool.image_id);
        const RerankResult r = rerank(net, img, pool, top_k, path, scales);
        out.push_back(apply_rerank(pool, r));
      }
      timer.stop();
      const std::string out_name =
          rr.out.empty() ? rr.proposals + "-rerank-" + rr.path : rr.out;
      const std::string out_path =
          Dataset::proposals_path(rr.data, rr.split, out_name);
      save_proposals(out, out_path);
      json cfg;
      cfg["model"] = rr.model;
      cfg["proposals"] = rr.proposals;
      cfg["top_k"] = top_k;
      cfg["path"] = rr.path;
      cfg["scales"] = scales.sizes;
      m.config_json = cfg.dump();
      m.write(out_path + ".manifest.json");
      std::cout << "rerank: wrote " << out_path << "\n";
    } else if (cmd_eval->parsed()) {
      RunManifest m = base_manifest("eval", argc, argv, 0, threads);
      PhaseTimer timer(m);
      std::string out_dir;
      timer.start("eval");
      const EvalReport report = run_eval(ev, m, &out_dir);
      timer.stop();
      dump_reports(report, out_dir);
      m.write(out_dir + "/manifest.json");
      for (const auto& c : report.curves)
        std::cout << "eval: iou=" << c.iou_threshold
                  << " auc_log=" << fmt_double(c.auc_log())
                  << " recall@" << c.k_max << "="
                  << fmt_double(c.recall_at(c.k_max)) << "\n";
      std::cout << "eval: average_recall@" << report.recall_vs_iou.k_fixed
                << "=" << fmt_double(report.recall_vs_iou.average_recall)
                << " -> " << out_dir << "\n";
    } else if (cmd_report->parsed()) {
      RunManifest m = base_manifest("report", argc, argv, 0, threads);
      PhaseTimer timer(m);
      std::string out_dir;
      std::vector<EvalInstance> instances;
      timer.start("eval");
      const EvalReport report = run_eval(rp, m, &out_dir, &instances);
      timer.stop();
      timer.start("render");
      dump_reports(report, out_dir);
      write_curve_svg(report.curves, out_dir + "/curves.svg");
      const Dataset ds = Dataset::open(rp.data, rp.split);
      std::map<std::string, std::vector<HitRecord>> by_image;
      for (const auto& h : report.hits) by_image[h.image_id].push_back(h);
      int emitted = 0;
      for (const auto& inst : instances) {
        if (emitted >= rp_max_images) break;
        const ImageEntry& entry = ds.image_entry(inst.image_id);
        write_density_svg(entry.width, entry.height, inst.proposals,
                          rp_top_n,
                          out_dir + "/density_" + inst.image_id + ".svg");
        const auto it = by_image.find(inst.image_id);
        write_hitmiss_svg(entry.width, entry.height,
                          it == by_image.end() ? std::vector<HitRecord>{}
                                               : it->second,
                          out_dir + "/hitmiss_" + inst.image_id + ".svg");
        ++emitted;
      }
      timer.stop();
      m.write(out_dir + "/manifest.json");
      std::cout << "report: wrote curves + " << emitted
                << " image overlays -> " << out_dir << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

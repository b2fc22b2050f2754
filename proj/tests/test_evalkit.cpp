// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "boxrank/evalkit.hpp"
#include "testutil.hpp"

using namespace boxrank;

namespace {

// Brute-force references computed straight from the definitions.
double brute_recall(const std::vector<EvalInstance>& instances, int k,
                    double thr) {
  int hits = 0, total = 0;
  for (const auto& inst : instances) {
    for (const auto& gt : inst.gts) {
      ++total;
      bool hit = false;
      const int limit = std::min<int>(k, static_cast<int>(inst.proposals.size()));
      for (int r = 0; r < limit && !hit; ++r)
        if (iou(gt.box, inst.proposals[static_cast<size_t>(r)]) >= thr)
          hit = true;
      if (hit) ++hits;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

double brute_auc_log(const std::vector<EvalInstance>& instances, int k_max,
                     double thr) {
  if (k_max <= 1) return brute_recall(instances, 1, thr);
  double acc = 0.0;
  for (int k = 1; k < k_max; ++k)
    acc += brute_recall(instances, k, thr) *
           (std::log10(k + 1.0) - std::log10(static_cast<double>(k)));
  return acc / std::log10(static_cast<double>(k_max));
}

double brute_auc_linear(const std::vector<EvalInstance>& instances, int k_max,
                        double thr) {
  if (k_max <= 1) return brute_recall(instances, 1, thr);
  double acc = 0.0;
  for (int k = 1; k < k_max; ++k) acc += brute_recall(instances, k, thr);
  return acc / (k_max - 1);
}

int brute_k_for(const std::vector<EvalInstance>& instances, int k_max,
                double thr, double target) {
  for (int k = 1; k <= k_max; ++k)
    if (brute_recall(instances, k, thr) >= target) return k;
  return kMiss;
}

std::vector<EvalInstance> random_instances(Rng& rng, int n) {
  std::vector<EvalInstance> out;
  for (int i = 0; i < n; ++i) {
    EvalInstance inst;
    inst.image_id = "img_" + std::to_string(i);
    const int ngt = 1 + static_cast<int>(rng.uniform_int(5));
    const int np = 1 + static_cast<int>(rng.uniform_int(20));
    for (int g = 0; g < ngt; ++g)
      inst.gts.push_back(GroundTruth{static_cast<int>(rng.uniform_int(4)),
                                     testutil::random_box(rng)});
    for (int p = 0; p < np; ++p)
      inst.proposals.push_back(testutil::random_box(rng));
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("evalkit");

TEST_CASE("exact proposals give full recall and unit AUC") {
  std::vector<EvalInstance> instances;
  for (int i = 0; i < 5; ++i) {
    EvalInstance inst;
    inst.image_id = std::to_string(i);
    const Box b{10.0 + i, 20, 60.0 + i, 80};
    inst.gts.push_back(GroundTruth{0, b});
    inst.proposals.push_back(b);
    instances.push_back(inst);
  }
  CHECK(recall_at_k(instances, 1, 0.7) == 1.0);
  const RecallCurve c = make_recall_curve(instances, 0.7, 1000);
  CHECK(c.auc_log() == 1.0);
  CHECK(c.auc_linear() == 1.0);
  CHECK(c.proposals_for_recall(0.25) == 1);
  CHECK(c.proposals_for_recall(0.75) == 1);
}

TEST_CASE("disjoint proposals give zero recall and zero AUC") {
  EvalInstance inst;
  inst.image_id = "a";
  inst.gts.push_back(GroundTruth{0, Box{0, 0, 10, 10}});
  inst.proposals.push_back(Box{50, 50, 60, 60});
  const std::vector<EvalInstance> instances{inst};
  CHECK(recall_at_k(instances, 1, 0.5) == 0.0);
  const RecallCurve c = make_recall_curve(instances, 0.5, 100);
  CHECK(c.auc_log() == 0.0);
  CHECK(c.proposals_for_recall(0.25) == kMiss);
}

TEST_CASE("2-of-3 ground truths covered gives recall 2/3") {
  EvalInstance inst;
  inst.image_id = "a";
  inst.gts.push_back(GroundTruth{0, Box{0, 0, 10, 10}});
  inst.gts.push_back(GroundTruth{0, Box{20, 20, 30, 30}});
  inst.gts.push_back(GroundTruth{0, Box{40, 40, 50, 50}});
  inst.proposals.push_back(Box{0, 0, 10, 10});
  inst.proposals.push_back(Box{20, 20, 30, 30});
  inst.proposals.push_back(Box{70, 70, 90, 90});
  const std::vector<EvalInstance> instances{inst};
  const double got = recall_at_k(instances, 3, 0.7);
  CHECK(got == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(got == brute_recall(instances, 3, 0.7));
}

TEST_CASE("step curve hitting at k_max/10 gives exactly one third") {
  // Every gt first covered at rank 100 with k_max 1000:
  // auc_log = 1 - log10(100)/log10(1000) = 1/3 exactly.
  std::vector<EvalInstance> instances;
  EvalInstance inst;
  inst.image_id = "a";
  const Box gt{10, 10, 60, 60};
  inst.gts.push_back(GroundTruth{0, gt});
  for (int r = 0; r < 99; ++r) {
    const double x = 200.0 + (r % 10), y = 200.0 + (r / 10);
    inst.proposals.push_back(Box{x, y, x + 5, y + 5});
  }
  inst.proposals.push_back(gt);  // rank 100
  instances.push_back(inst);
  const RecallCurve c = make_recall_curve(instances, 0.7, 1000);
  CHECK(c.hit_ranks == std::vector<int>{100});
  CHECK(c.auc_log() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(c.auc_log() ==
        doctest::Approx(brute_auc_log(instances, 1000, 0.7)).epsilon(1e-12));
}

TEST_CASE("metrics agree with brute force on random instances") {
  Rng rng(83);
  for (int trial = 0; trial < 25; ++trial) {
    const auto instances = random_instances(rng, 8);
    const int k_max = 5 + static_cast<int>(rng.uniform_int(20));
    for (double thr : {0.5, 0.7}) {
      for (int k : {1, 3, k_max})
        CHECK(recall_at_k(instances, k, thr) ==
              brute_recall(instances, k, thr));
      const RecallCurve c = make_recall_curve(instances, thr, k_max);
      CHECK(c.auc_log() ==
            doctest::Approx(brute_auc_log(instances, k_max, thr))
                .epsilon(1e-12));
      CHECK(c.auc_linear() ==
            doctest::Approx(brute_auc_linear(instances, k_max, thr))
                .epsilon(1e-12));
      for (double target : {0.25, 0.5, 0.75})
        CHECK(c.proposals_for_recall(target) ==
              brute_k_for(instances, k_max, thr, target));
      for (int k : c.grid_ks)
        CHECK(c.recall_at(k) == brute_recall(instances, k, thr));
    }
  }
}

TEST_CASE("recall-vs-IoU at exact overlap 0.6 and its average") {
  // Proposal nested in gt with IoU exactly 0.6: hit for 0.5/0.55/0.6.
  EvalInstance inst;
  inst.image_id = "a";
  inst.gts.push_back(GroundTruth{0, Box{0, 0, 10, 10}});
  inst.proposals.push_back(Box{0, 0, 10, 6});
  const std::vector<EvalInstance> instances{inst};
  const RecallVsIou r = make_recall_vs_iou(instances, 10);
  REQUIRE(r.thresholds.size() == 10);
  for (size_t i = 0; i < r.thresholds.size(); ++i) {
    const double expect = r.thresholds[i] <= 0.6 ? 1.0 : 0.0;
    CHECK(r.recall[i] == expect);
  }
  CHECK(r.average_recall == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("proposals_for_recall on a step curve and a flat curve") {
  RecallCurve c;
  c.k_max = 100;
  c.total_gt = 10;
  // 5 of 10 first covered at k=20, rest misses: 50% reached at 20.
  for (int i = 0; i < 5; ++i) c.hit_ranks.push_back(20);
  for (int i = 0; i < 5; ++i) c.hit_ranks.push_back(kMiss);
  CHECK(c.proposals_for_recall(0.5) == 20);
  CHECK(c.proposals_for_recall(0.25) == 20);
  CHECK(c.proposals_for_recall(0.75) == kMiss);

  RecallCurve flat;
  flat.k_max = 100;
  flat.total_gt = 10;
  for (int i = 0; i < 3; ++i) flat.hit_ranks.push_back(1);
  for (int i = 0; i < 7; ++i) flat.hit_ranks.push_back(kMiss);
  CHECK(flat.proposals_for_recall(0.25) == 1);
  CHECK(flat.proposals_for_recall(0.5) == kMiss);
}

TEST_CASE("AUC of a dominating curve is at least the dominated one") {
  Rng rng(89);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 12;
    RecallCurve lo, hi;
    lo.k_max = hi.k_max = 50;
    lo.total_gt = hi.total_gt = n;
    for (int i = 0; i < n; ++i) {
      const int h = 1 + static_cast<int>(rng.uniform_int(60));
      const int better = std::max(1, h - static_cast<int>(rng.uniform_int(10)));
      lo.hit_ranks.push_back(h > 50 ? kMiss : h);
      hi.hit_ranks.push_back(better > 50 ? kMiss : better);
    }
    CHECK(hi.auc_log() >= lo.auc_log() - 1e-12);
    CHECK(hi.auc_log() >= 0.0);
    CHECK(hi.auc_log() <= 1.0);
  }
}

TEST_CASE("category filter with the full set equals unfiltered") {
  Rng rng(97);
  const auto instances = random_instances(rng, 6);
  std::vector<ImageAnnotations> anns;
  std::vector<ProposalSet> props;
  for (const auto& inst : instances) {
    ImageAnnotations a;
    a.image_id = inst.image_id;
    a.objects = inst.gts;
    anns.push_back(a);
    ProposalSet p;
    p.image_id = inst.image_id;
    p.boxes = inst.proposals;
    p.scores.resize(p.boxes.size());
    for (size_t i = 0; i < p.scores.size(); ++i)
      p.scores[i] = 1.0 - static_cast<double>(i) * 0.01;
    props.push_back(p);
  }
  EvalOptions all;
  all.k_max = 20;
  EvalOptions filtered = all;
  filtered.category_filter = {0, 1, 2, 3};
  const auto ia = make_instances(anns, props, all);
  const auto ib = make_instances(anns, props, filtered);
  const auto ra = evaluate(ia, all);
  const auto rb = evaluate(ib, filtered);
  CHECK(ra.curves[0].auc_log() == rb.curves[0].auc_log());
  CHECK(ra.total_gt == rb.total_gt);

  // Missing proposals for an annotated image is a data error.
  anns.push_back(ImageAnnotations{"img_missing", {}});
  CHECK_THROWS_AS(make_instances(anns, props, all), DataError);
}

TEST_CASE("report dump round-trips the curve and handles zero gt") {
  namespace fs = std::filesystem;
  const std::string dir =
      (fs::temp_directory_path() / "boxrank_eval_dump").string();
  fs::remove_all(dir);
  Rng rng(101);
  const auto instances = random_instances(rng, 5);
  EvalOptions opt;
  opt.thresholds = {0.7, 0.5};
  opt.k_max = 50;
  opt.k_fixed = 20;
  const EvalReport report = evaluate(instances, opt);
  dump_reports(report, dir);
  const auto pts = load_curve_csv(dir + "/curves.csv");
  size_t i = 0;
  for (const auto& c : report.curves)
    for (size_t g = 0; g < c.grid_ks.size(); ++g, ++i) {
      REQUIRE(i < pts.size());
      CHECK(pts[i].iou == c.iou_threshold);
      CHECK(pts[i].k == c.grid_ks[g]);
      CHECK(pts[i].recall == c.grid_recall[g]);
    }
  CHECK(i == pts.size());

  // Zero ground truth: header-only hit/miss CSV.
  EvalInstance empty;
  empty.image_id = "none";
  empty.proposals.push_back(Box{0, 0, 5, 5});
  const EvalReport er = evaluate({empty}, opt);
  dump_reports(er, dir);
  std::ifstream is(dir + "/hits_misses.csv");
  std::string line;
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 1);
}

TEST_SUITE_END();

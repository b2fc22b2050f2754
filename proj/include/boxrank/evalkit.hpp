// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>
#include <vector>

#include "boxrank/dataio.hpp"
#include "boxrank/geometry.hpp"

namespace boxrank {

// A gt box counts as covered at threshold t once any proposal ranked at or
// above k overlaps it with IoU >= t. No one-to-one matching: one proposal
// may cover several gt boxes.

inline constexpr int kMiss = std::numeric_limits<int>::max();

struct EvalOptions {
  std::vector<double> thresholds{0.7};  // headline curve thresholds
  int k_max = 1000;
  int k_fixed = 1000;     // proposal budget for the recall-vs-IoU sweep
  double max_gt_area = 0.0;              // >0: keep only gt with area < this
  std::vector<int> category_filter;     // non-empty: keep only these
};

struct HitRecord {
  std::string image_id;
  int gt_index = 0;
  int category = 0;
  Box gt;
  double best_iou = 0.0;  // max IoU over the top-k_max proposals
  int best_rank = 0;      // 1-based rank of that proposal, 0 if none overlap
  Box best_box;
  int hit_rank = kMiss;   // smallest rank with IoU >= threshold
};

struct RecallCurve {
  double iou_threshold = 0.7;
  int k_max = 1000;
  int total_gt = 0;
  std::vector<int> hit_ranks;  // per gt; kMiss when never covered
  std::vector<int> grid_ks;    // display grid {1,2,5,...} + k_max
  std::vector<double> grid_recall;

  double recall_at(int k) const;
  double auc_log() const;
  double auc_linear() const;
  // Smallest k with recall >= target; kMiss when unreached.
  int proposals_for_recall(double target) const;
};

struct RecallVsIou {
  int k_fixed = 1000;
  std::vector<double> thresholds;  // 0.50, 0.55, ..., 0.95
  std::vector<double> recall;
  double average_recall = 0.0;
};

struct EvalReport {
  std::vector<RecallCurve> curves;     // one per requested threshold
  RecallVsIou recall_vs_iou;
  std::vector<HitRecord> hits;         // at thresholds[0]
  int images = 0;
  int total_gt = 0;
  std::string auc_formula;             // stamped into every report
};

// Per-image ranked boxes paired with (filtered) ground truth.
struct EvalInstance {
  std::string image_id;
  std::vector<Box> proposals;          // ranked, best first
  std::vector<GroundTruth> gts;
};

// Joins annotations with proposal files; throws DataError when an annotated
// image has no proposals. Applies the category / gt-area filters.
std::vector<EvalInstance> make_instances(
    const std::vector<ImageAnnotations>& annotations,
    const std::vector<ProposalSet>& proposals, const EvalOptions& opt);

double recall_at_k(const std::vector<EvalInstance>& instances, int k,
                   double iou_threshold);

RecallCurve make_recall_curve(const std::vector<EvalInstance>& instances,
                              double iou_threshold, int k_max);

RecallVsIou make_recall_vs_iou(const std::vector<EvalInstance>& instances,
                               int k_fixed);

std::vector<HitRecord> make_hit_records(
    const std::vector<EvalInstance>& instances, double iou_threshold,
    int k_max);

EvalReport evaluate(const std::vector<EvalInstance>& instances,
                    const EvalOptions& opt);

// The display grid {1, 2, 5, 10, 20, 50, ...} up to and including k_max.
std::vector<int> recall_grid(int k_max);

// Round-trip-exact float formatting used by every CSV/SVG writer.
std::string fmt_double(double v);

// CSV/JSON emission. Writes curves.csv, recall_vs_iou.csv, summary.csv,
// hits_misses.csv and metrics.json into out_dir.
void dump_reports(const EvalReport& report, const std::string& out_dir);

// Re-reads a curves.csv written by dump_reports (round-trip checks).
struct CurvePoint {
  double iou;
  int k;
  double recall;
};
std::vector<CurvePoint> load_curve_csv(const std::string& path);

}  // namespace boxrank

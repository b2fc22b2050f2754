// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "boxrank/error.hpp"
#include "boxrank/parallel.hpp"

namespace boxrank {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<int> recall_grid(int k_max) {
  std::vector<int> ks;
  for (int64_t decade = 1; decade <= k_max; decade *= 10)
    for (int m : {1, 2, 5}) {
      const int64_t k = decade * m;
      if (k <= k_max) ks.push_back(static_cast<int>(k));
    }
  if (ks.empty() || ks.back() != k_max) ks.push_back(k_max);
  return ks;
}

std::vector<EvalInstance> make_instances(
    const std::vector<ImageAnnotations>& annotations,
    const std::vector<ProposalSet>& proposals, const EvalOptions& opt) {
  std::map<std::string, const ProposalSet*> by_id;
  for (const auto& p : proposals) by_id[p.image_id] = &p;
  std::vector<EvalInstance> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    const auto it = by_id.find(a.image_id);
    if (it == by_id.end())
      throw DataError(msg("image ", a.image_id,
                          " has ground truth but no proposals"));
    EvalInstance inst;
    inst.image_id = a.image_id;
    inst.proposals = it->second->boxes;
    for (const auto& gt : a.objects) {
      if (opt.max_gt_area > 0.0 && !(gt.box.area() < opt.max_gt_area))
        continue;
      if (!opt.category_filter.empty() &&
          std::find(opt.category_filter.begin(), opt.category_filter.end(),
                    gt.category) == opt.category_filter.end())
        continue;
      inst.gts.push_back(gt);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

// Per-gt smallest covering rank plus best-overlap bookkeeping.
struct GtCover {
  int hit_rank = kMiss;
  double best_iou = 0.0;
  int best_rank = 0;
  Box best_box;
};

std::vector<GtCover> cover_one(const EvalInstance& inst, double threshold,
                               int k_max) {
  std::vector<GtCover> covers(inst.gts.size());
  const int limit =
      std::min<int>(k_max, static_cast<int>(inst.proposals.size()));
  for (size_t g = 0; g < inst.gts.size(); ++g) {
    const Box& gt = inst.gts[g].box;
    GtCover& c = covers[g];
    for (int r = 0; r < limit; ++r) {
      const double v = iou(gt, inst.proposals[static_cast<size_t>(r)]);
      if (v > c.best_iou) {
        c.best_iou = v;
        c.best_rank = r + 1;
        c.best_box = inst.proposals[static_cast<size_t>(r)];
      }
      if (c.hit_rank == kMiss && v >= threshold) c.hit_rank = r + 1;
    }
  }
  return covers;
}

}  // namespace

double recall_at_k(const std::vector<EvalInstance>& instances, int k,
                   double iou_threshold) {
  if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw ConfigError("recall_at_k: threshold must be in (0,1]");
  int64_t hits = 0, total = 0;
  for (const auto& inst : instances) {
    const auto covers = cover_one(inst, iou_threshold, k);
    total += static_cast<int64_t>(covers.size());
    for (const auto& c : covers)
      if (c.hit_rank <= k) ++hits;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

double RecallCurve::recall_at(int k) const {
  if (total_gt == 0) return 0.0;
  int64_t hits = 0;
  for (int h : hit_ranks)
    if (h <= k) ++hits;
  return static_cast<double>(hits) / total_gt;
}

// Exact area under the right-continuous step curve r(k) on a log10 axis,
// normalized by log10(k_max):
//   auc_log = sum_{k=1}^{kmax-1} r(k) * (log10(k+1) - log10(k)) / log10(kmax)
// which collapses to a per-gt closed form.
double RecallCurve::auc_log() const {
  if (total_gt == 0) return 0.0;
  if (k_max <= 1) return recall_at(1);
  const double denom = std::log10(static_cast<double>(k_max));
  double acc = 0.0;
  for (int h : hit_ranks) {
    if (h > k_max || h == kMiss) continue;
    acc += 1.0 - std::log10(static_cast<double>(h)) / denom;
  }
  return acc / total_gt;
}

double RecallCurve::auc_linear() const {
  if (total_gt == 0) return 0.0;
  if (k_max <= 1) return recall_at(1);
  double acc = 0.0;
  for (int h : hit_ranks) {
    if (h > k_max || h == kMiss) continue;
    acc += static_cast<double>(k_max - h) / (k_max - 1);
  }
  return acc / total_gt;
}

int RecallCurve::proposals_for_recall(double target) const {
  if (total_gt == 0) return kMiss;
  std::vector<int> sorted = hit_ranks;
  std::sort(sorted.begin(), sorted.end());
  const int need = static_cast<int>(
      std::ceil(target * static_cast<double>(total_gt) - 1e-12));
  if (need <= 0) return 1;
  if (need > total_gt) return kMiss;
  const int k = sorted[static_cast<size_t>(need - 1)];
  return (k == kMiss || k > k_max) ? kMiss : k;
}

RecallCurve make_recall_curve(const std::vector<EvalInstance>& instances,
                              double iou_threshold, int k_max) {
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  RecallCurve curve;
  curve.iou_threshold = iou_threshold;
  curve.k_max = k_max;
  std::vector<std::vector<GtCover>> covers(instances.size());
  parallel_for(static_cast<int64_t>(instances.size()), [&](int64_t i) {
    covers[static_cast<size_t>(i)] =
        cover_one(instances[static_cast<size_t>(i)], iou_threshold, k_max);
  });
  for (const auto& cs : covers)
    for (const auto& c : cs) curve.hit_ranks.push_back(c.hit_rank);
  curve.total_gt = static_cast<int>(curve.hit_ranks.size());
  curve.grid_ks = recall_grid(k_max);
  for (int k : curve.grid_ks) curve.grid_recall.push_back(curve.recall_at(k));
  return curve;
}

RecallVsIou make_recall_vs_iou(const std::vector<EvalInstance>& instances,
                               int k_fixed) {
  RecallVsIou out;
  out.k_fixed = k_fixed;
  double acc = 0.0;
  for (int i = 0; i <= 9; ++i) {
    const double thr = static_cast<double>(50 + 5 * i) / 100.0;
    const double r = recall_at_k(instances, k_fixed, thr);
    out.thresholds.push_back(thr);
    out.recall.push_back(r);
    acc += r;
  }
  out.average_recall = acc / 10.0;
  return out;
}

std::vector<HitRecord> make_hit_records(
    const std::vector<EvalInstance>& instances, double iou_threshold,
    int k_max) {
  std::vector<HitRecord> out;
  for (const auto& inst : instances) {
    const auto covers = cover_one(inst, iou_threshold, k_max);
    for (size_t g = 0; g < covers.size(); ++g) {
      HitRecord rec;
      rec.image_id = inst.image_id;
      rec.gt_index = static_cast<int>(g);
      rec.category = inst.gts[g].category;
      rec.gt = inst.gts[g].box;
      rec.best_iou = covers[g].best_iou;
      rec.best_rank = covers[g].best_rank;
      rec.best_box = covers[g].best_box;
      rec.hit_rank = covers[g].hit_rank;
      out.push_back(rec);
    }
  }
  return out;
}

EvalReport evaluate(const std::vector<EvalInstance>& instances,
                    const EvalOptions& opt) {
  if (opt.thresholds.empty()) throw ConfigError("eval: no thresholds");
  EvalReport report;
  report.images = static_cast<int>(instances.size());
  for (double thr : opt.thresholds)
    report.curves.push_back(make_recall_curve(instances, thr, opt.k_max));
  report.total_gt = report.curves.front().total_gt;
  report.recall_vs_iou = make_recall_vs_iou(instances, opt.k_fixed);
  report.hits =
      make_hit_records(instances, opt.thresholds.front(), opt.k_max);
  report.auc_formula =
      "auc_log = sum_{k=1}^{kmax-1} r(k)*(log10(k+1)-log10(k)) / log10(kmax);"
      " auc_linear = sum_{k=1}^{kmax-1} r(k) / (kmax-1);"
      " r right-continuous step over integer k";

  // Report-level sanity: recall monotone in k and antitone in threshold.
  for (const auto& c : report.curves)
    for (size_t i = 1; i < c.grid_recall.size(); ++i)
      if (c.grid_recall[i] + 1e-12 < c.grid_recall[i - 1])
        throw Error("recall curve not monotone in k");
  for (size_t i = 1; i < report.recall_vs_iou.recall.size(); ++i)
    if (report.recall_vs_iou.recall[i] >
        report.recall_vs_iou.recall[i - 1] + 1e-12)
      throw Error("recall not antitone in IoU threshold");
  return report;
}

namespace {

std::string box_csv(const Box& b) {
  return fmt_double(b.x_min) + "," + fmt_double(b.y_min) + "," +
         fmt_double(b.x_max) + "," + fmt_double(b.y_max);
}

}  // namespace

void dump_reports(const EvalReport& report, const std::string& out_dir) {
  ensure_dir(out_dir);
  {
    std::ofstream os(out_dir + "/curves.csv", std::ios::trunc);
    if (!os) throw IoError(msg("cannot write ", out_dir, "/curves.csv"));
    os << "iou,k,recall\n";
    for (const auto& c : report.curves)
      for (size_t i = 0; i < c.grid_ks.size(); ++i)
        os << fmt_double(c.iou_threshold) << "," << c.grid_ks[i] << ","
           << fmt_double(c.grid_recall[i]) << "\n";
  }
  {
    std::ofstream os(out_dir + "/recall_vs_iou.csv", std::ios::trunc);
    os << "iou,recall\n";
    const auto& r = report.recall_vs_iou;
    for (size_t i = 0; i < r.thresholds.size(); ++i)
      os << fmt_double(r.thresholds[i]) << "," << fmt_double(r.recall[i])
         << "\n";
  }
  {
    std::ofstream os(out_dir + "/summary.csv", std::ios::trunc);
    os << "iou,auc_log,auc_linear,k_for_25,k_for_50,k_for_75\n";
    for (const auto& c : report.curves) {
      os << fmt_double(c.iou_threshold) << "," << fmt_double(c.auc_log())
         << "," << fmt_double(c.auc_linear());
      for (double target : {0.25, 0.5, 0.75}) {
        const int k = c.proposals_for_recall(target);
        os << "," << (k == kMiss ? std::string("unreached")
                                 : std::to_string(k));
      }
      os << "\n";
    }
  }
  {
    std::ofstream os(out_dir + "/hits_misses.csv", std::ios::trunc);
    os << "image_id,gt_index,category,gt_x_min,gt_y_min,gt_x_max,gt_y_max,"
          "status,best_iou,best_rank,hit_rank,best_x_min,best_y_min,"
          "best_x_max,best_y_max\n";
    for (const auto& h : report.hits) {
      const bool hit = h.hit_rank != kMiss;
      os << h.image_id << "," << h.gt_index << "," << h.category << ","
         << box_csv(h.gt) << "," << (hit ? "hit" : "miss") << ","
         << fmt_double(h.best_iou) << "," << h.best_rank << ","
         << (hit ? std::to_string(h.hit_rank) : std::string("-")) << ","
         << box_csv(h.best_box) << "\n";
    }
  }
  {
    nlohmann::json j;
    j["images"] = report.images;
    j["total_gt"] = report.total_gt;
    j["auc_formula"] = report.auc_formula;
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : report.curves) {
      nlohmann::json jc;
      jc["iou"] = c.iou_threshold;
      jc["k_max"] = c.k_max;
      jc["auc_log"] = c.auc_log();
      jc["auc_linear"] = c.auc_linear();
      for (double target : {0.25, 0.5, 0.75}) {
        const int k = c.proposals_for_recall(target);
        jc[msg("k_for_", static_cast<int>(target * 100))] =
            k == kMiss ? nlohmann::json() : nlohmann::json(k);
      }
      curves.push_back(jc);
    }
    j["curves"] = curves;
    j["average_recall"] = report.recall_vs_iou.average_recall;
    j["ar_k"] = report.recall_vs_iou.k_fixed;
    std::ofstream os(out_dir + "/metrics.json", std::ios::trunc);
    os << j.dump(2) << "\n";
  }
}

std::vector<CurvePoint> load_curve_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(msg("cannot open ", path));
  std::string line;
  if (!std::getline(is, line) || line != "iou,k,recall")
    throw DataError(msg("bad curve CSV header in ", path));
  std::vector<CurvePoint> out;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f0, f1, f2;
    if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
        !std::getline(ss, f2))
      throw DataError(msg("line ", line_no, ": bad curve row"));
    CurvePoint p;
    p.iou = std::stod(f0);
    p.k = std::stoi(f1);
    p.recall = std::stod(f2);
    out.push_back(p);
  }
  return out;
}

}  // namespace boxrank

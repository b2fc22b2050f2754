// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "boxrank/geometry.hpp"
#include "boxrank/image.hpp"

namespace boxrank {

struct GroundTruth {
  int category = 0;
  Box box;
};

struct ImageAnnotations {
  std::string image_id;
  std::vector<GroundTruth> objects;
};

// A ranked proposal pool for one image. `boxes` and `scores` run in
// descending source-score order. After reranking, `objectness` holds the
// model scores for the scored prefix and `ranker` names the path.
struct ProposalSet {
  std::string image_id;
  std::vector<Box> boxes;
  std::vector<double> scores;
  std::string source;
  std::vector<double> objectness;
  std::string ranker;
};

struct ImageEntry {
  std::string id;
  std::string file;  // relative to the split image directory
  int width = 0;
  int height = 0;
};

// Directory layout: root/{images,annotations,proposals,models,reports}/split/
class Dataset {
 public:
  static Dataset open(const std::string& root, const std::string& split);

  const std::string& root() const { return root_; }
  const std::string& split() const { return split_; }
  const std::vector<ImageEntry>& images() const { return images_; }
  const std::vector<ImageAnnotations>& annotations() const {
    return annotations_;
  }

  bool has_image(const std::string& id) const {
    return index_.count(id) != 0;
  }
  const ImageEntry& image_entry(const std::string& id) const;
  const ImageAnnotations& annotations_for(const std::string& id) const;
  ImageU8 load_image(const std::string& id) const;

  static std::string images_dir(const std::string& root,
                                const std::string& split);
  static std::string index_path(const std::string& root,
                                const std::string& split);
  static std::string annotations_path(const std::string& root,
                                      const std::string& split);
  static std::string proposals_path(const std::string& root,
                                    const std::string& split,
                                    const std::string& name);

 private:
  std::string root_, split_;
  std::vector<ImageEntry> images_;
  std::vector<ImageAnnotations> annotations_;
  std::map<std::string, size_t> index_;
  std::map<std::string, size_t> ann_index_;
};

struct SynthConfig {
  int num_images = 100;
  int width = 320;
  int height = 240;
  int min_objects = 2;
  int max_objects = 5;
  int category_count = 8;
  double clutter = 0.5;  // background clutter density knob
  uint64_t seed = 1;

  void validate() const;
};

// Renders textured shapes over edge-rich clutter, writes PNGs, an image
// index and annotations, and returns the opened dataset. Deterministic per
// seed (per-image substreams), byte-identical across runs.
Dataset gen_synthetic(const SynthConfig& cfg, const std::string& root,
                      const std::string& split);

struct BaselineConfig {
  int num_proposals = 1000;
  double alpha = 0.65;      // sliding-window grid density
  double min_side = 24.0;
  double nms_iou = 0.8;
};

// Edge-density sliding-window proposer: Sobel magnitude, interior density
// minus a boundary-straggling penalty, NMS, top-n. Intentionally ranks
// loose contour-heavy boxes well; the reranker exists to fix that.
ProposalSet baseline_propose(const ImageU8& image,
                             const std::string& image_id,
                             const BaselineConfig& cfg);

// JSON Lines IO. One image per line:
//   {"image_id": str, "boxes": [[x_min,y_min,x_max,y_max],...],
//    "scores": [...], "categories": [...]}
// Loaders reject malformed records with their line number.
void save_annotations(const std::vector<ImageAnnotations>& anns,
                      const std::string& path);
std::vector<ImageAnnotations> load_annotations(const std::string& path);
void save_proposals(const std::vector<ProposalSet>& proposals,
                    const std::string& path);
std::vector<ProposalSet> load_proposals(const std::string& path);

void save_image_index(const std::vector<ImageEntry>& entries,
                      const std::string& path);
std::vector<ImageEntry> load_image_index(const std::string& path);

void ensure_dir(const std::string& path);

}  // namespace boxrank

// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "boxrank/dataio.hpp"
#include "boxrank/net.hpp"
#include "boxrank/roipool.hpp"

namespace boxrank {

enum class ScorePath { crop, fast };

const char* score_path_name(ScorePath p);
ScorePath score_path_from_name(const std::string& name);

struct RerankResult {
  std::string image_id;
  // Output order as input indices. A bijection; the first `scored` entries
  // are sorted by objectness descending (ties keep source rank), the tail
  // keeps source order.
  std::vector<int> permutation;
  std::vector<double> objectness;  // parallel to the scored prefix
  int scored = 0;
  ScorePath path = ScorePath::fast;
};

// Sorting core behind rerank: indices 0..k-1 stable-sorted by score
// descending (so ties keep source rank), then k..n-1 in source order.
std::vector<int> rank_by_objectness(const std::vector<float>& scores, int n,
                                    int k);

// Scores the top_k proposals in source order and reorders them by
// objectness; top_k < 0 means all.
RerankResult rerank(Net& net, const ImageU8& image,
                    const ProposalSet& proposals, int top_k, ScorePath path,
                    const ScaleSet& scales);

// Applies the permutation: boxes and source scores reordered, objectness
// attached for the scored prefix, ranker field set.
ProposalSet apply_rerank(const ProposalSet& input, const RerankResult& r);

// Max |crop score - fast score| over the given boxes. Meaningful when the
// caller constructs aligned cases (square image, whole-image box, a scale
// set containing the exact input side, roi grid equal to the conv2 output);
// arbitrary boxes are unconstrained.
double score_consistency_check(Net& net, const ImageU8& image,
                               const std::vector<Box>& boxes);

// Crop-path scoring used by rerank (batched crops through the full net).
std::vector<float> forward_objectness_crop(Net& net, const ImageU8& image,
                                           const std::vector<Box>& boxes);

}  // namespace boxrank

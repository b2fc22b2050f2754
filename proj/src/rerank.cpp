// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "boxrank/parallel.hpp"

namespace boxrank {

const char* score_path_name(ScorePath p) {
  return p == ScorePath::crop ? "crop" : "fast";
}

ScorePath score_path_from_name(const std::string& name) {
  if (name == "crop") return ScorePath::crop;
  if (name == "fast") return ScorePath::fast;
  throw ConfigError(msg("unknown score path '", name, "'"));
}

std::vector<float> forward_objectness_crop(Net& net, const ImageU8& image,
                                           const std::vector<Box>& boxes) {
  const NetConfig& cfg = net.config();
  const int s = cfg.input_side;
  std::vector<float> scores(boxes.size());
  constexpr int kChunk = 32;
  const int n = static_cast<int>(boxes.size());
  Tensor<float> batch;
  for (int base = 0; base < n; base += kChunk) {
    const int len = std::min(kChunk, n - base);
    batch = Tensor<float>::nchw(len, 3, s, s);
    const int64_t item_len = static_cast<int64_t>(3) * s * s;
    // Crops are independent; rows can be prepared in parallel.
    parallel_for(len, [&](int64_t i) {
      const size_t bi = static_cast<size_t>(base) + static_cast<size_t>(i);
      try {
        const Tensor<float> crop = preprocess_crop(
            image, boxes[bi], cfg, net.channel_mean());
        std::copy(crop.data(), crop.data() + item_len,
                  batch.data() + i * item_len);
      } catch (const Error& e) {
        throw GeometryError(msg("box ", bi, ": ", e.what()));
      }
    });
    const Tensor<float> logits = net.forward_crop(batch);
    for (int i = 0; i < len; ++i) {
      const float l0 = logits[static_cast<int64_t>(i) * 2];
      const float l1 = logits[static_cast<int64_t>(i) * 2 + 1];
      const float m = std::max(l0, l1);
      const float e0 = std::exp(l0 - m);
      const float e1 = std::exp(l1 - m);
      scores[static_cast<size_t>(base + i)] = e1 / (e0 + e1);
    }
  }
  return scores;
}

std::vector<int> rank_by_objectness(const std::vector<float>& scores, int n,
                                    int k) {
  if (k > n || static_cast<int>(scores.size()) < k)
    throw DimensionError("rank_by_objectness: bad prefix length");
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.begin() + k, [&](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });
  return perm;
}

RerankResult rerank(Net& net, const ImageU8& image,
                    const ProposalSet& proposals, int top_k, ScorePath path,
                    const ScaleSet& scales) {
  const int n = static_cast<int>(proposals.boxes.size());
  const int k = top_k < 0 ? n : std::min(top_k, n);
  RerankResult r;
  r.image_id = proposals.image_id;
  r.path = path;
  r.scored = k;
  r.permutation.resize(static_cast<size_t>(n));
  std::iota(r.permutation.begin(), r.permutation.end(), 0);
  if (k == 0) return r;

  const std::vector<Box> prefix(proposals.boxes.begin(),
                                proposals.boxes.begin() + k);
  std::vector<float> scores;
  if (path == ScorePath::crop)
    scores = forward_objectness_crop(net, image, prefix);
  else
    scores = forward_objectness_fast(net, image, prefix, scales);

  r.permutation = rank_by_objectness(scores, n, k);
  r.objectness.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i)
    r.objectness.push_back(
        scores[static_cast<size_t>(r.permutation[static_cast<size_t>(i)])]);
  return r;
}

ProposalSet apply_rerank(const ProposalSet& input, const RerankResult& r) {
  if (r.permutation.size() != input.boxes.size())
    throw DimensionError("apply_rerank: permutation size mismatch");
  ProposalSet out;
  out.image_id = input.image_id;
  out.source = input.source;
  out.ranker = score_path_name(r.path);
  out.boxes.reserve(input.boxes.size());
  out.scores.reserve(input.scores.size());
  for (int idx : r.permutation) {
    out.boxes.push_back(input.boxes[static_cast<size_t>(idx)]);
    out.scores.push_back(input.scores[static_cast<size_t>(idx)]);
  }
  out.objectness = r.objectness;
  return out;
}

double score_consistency_check(Net& net, const ImageU8& image,
                               const std::vector<Box>& boxes) {
  ScaleSet aligned;
  const double side = net.config().input_side;
  aligned.sizes = {side};
  aligned.target_area = side * side;
  const std::vector<float> fast =
      forward_objectness_fast(net, image, boxes, aligned);
  const std::vector<float> crop = forward_objectness_crop(net, image, boxes);
  double worst = 0.0;
  for (size_t i = 0; i < boxes.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(fast[i]) -
                                     static_cast<double>(crop[i])));
  return worst;
}

}  // namespace boxrank

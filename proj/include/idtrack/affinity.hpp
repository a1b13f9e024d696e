// Copyright 2026 The idtrack Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDTRACK_AFFINITY_HPP_
#define IDTRACK_AFFINITY_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <vector>

#include "idtrack/core_types.hpp"

namespace idtrack {

inline double iou(const BBox& a, const BBox& b) {
  const Corners ca = to_corner(a);
  const Corners cb = to_corner(b);
  const double iw = std::min(ca.right, cb.right) - std::max(ca.left, cb.left);
  const double ih = std::min(ca.bottom, cb.bottom) - std::max(ca.top, cb.top);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = area(a) + area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Cosine similarity of two unit vectors, clamped below at 0 so that
// anti-correlated features score like unrelated ones.
inline double id_similarity(std::span<const double> e1, std::span<const double> e2) {
  if (e1.size() != e2.size()) throw Error("id_similarity: embedding length mismatch");
  if (!is_unit(e1) || !is_unit(e2)) throw Error("id_similarity: embedding is not unit-norm");
  return std::clamp(dot(e1, e2), 0.0, 1.0);
}

// Convex mixing weights for box overlap (w1) and identity similarity (w2).
class AffinityWeights {
 public:
  AffinityWeights(double w1, double w2) : w1_(w1), w2_(w2) {
    if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw Error("AffinityWeights: negative weight");
    if (std::abs(w1 + w2 - 1.0) > 1e-9) throw Error("AffinityWeights: w1 + w2 must equal 1");
  }

  static AffinityWeights balanced() { return {0.5, 0.5}; }
  // Appearance-heavy preset for crowded pedestrian scenes.
  static AffinityWeights mot16() { return {0.2, 0.8}; }
  static AffinityWeights iou_only() { return {1.0, 0.0}; }
  static AffinityWeights id_only() { return {0.0, 1.0}; }

  double w1() const { return w1_; }
  double w2() const { return w2_; }

 private:
  double w1_;
  double w2_;
};

// Dense row-major trajectories x detections score matrix.
class AffinityMatrix {
 public:
  AffinityMatrix() = default;
  AffinityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Anything exposing a head box and head embedding can be scored.
template <class T>
concept TrackHead = requires(const T& t) {
  { t.head_box } -> std::convertible_to<BBox>;
  { t.head_embedding } -> std::convertible_to<std::span<const double>>;
};

template <TrackHead Track>
AffinityMatrix combined_affinity(std::span<const Track> trajs, std::span<const Detection> dets,
                                 const AffinityWeights& weights) {
  AffinityMatrix a(trajs.size(), dets.size());
  const bool use_id = weights.w2() > 0.0;
  if (use_id) {
    for (const Detection& d : dets) {
      if (!d.has_embedding()) throw Error("combined_affinity: detection lacks an embedding");
    }
  }
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      double v = 0.0;
      if (weights.w1() > 0.0) v += weights.w1() * iou(trajs[i].head_box, dets[j].box);
      if (use_id) {
        v += weights.w2() * id_similarity(trajs[i].head_embedding, dets[j].embedding);
      }
      a(i, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  return a;
}

template <TrackHead Track>
AffinityMatrix combined_affinity(const std::vector<Track>& trajs,
                                 const std::vector<Detection>& dets,
                                 const AffinityWeights& weights) {
  return combined_affinity(std::span<const Track>(trajs), std::span<const Detection>(dets),
                           weights);
}

// Greedy non-maximum suppression. Candidates are visited by descending
// confidence (ties: lower index first); survivors keep their input order.
inline std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw Error("nms: threshold outside [0,1]");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  std::vector<bool> keep(dets.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (iou(dets[idx].box, dets[k].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(idx);
      keep[idx] = true;
    }
  }
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep[i]) out.push_back(dets[i]);
  }
  return out;
}

}  // namespace idtrack

#endif  // IDTRACK_AFFINITY_HPP_

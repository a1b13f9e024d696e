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

#ifndef IDTRACK_CORE_TYPES_HPP_
#define IDTRACK_CORE_TYPES_HPP_

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace idtrack {

// All precondition violations surface as idtrack::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corner (left, top, right, bottom) view of a box.
struct Corners {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;
};

// Axis-aligned box stored in center form. Width and height are strictly
// positive; construction fails otherwise.
class BBox {
 public:
  BBox(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) ||
        !std::isfinite(h)) {
      throw Error("BBox: non-finite coordinate");
    }
    if (!(w > 0.0) || !(h > 0.0)) {
      throw Error("BBox: width and height must be positive");
    }
  }

  static BBox from_corners(const Corners& c) {
    return BBox((c.left + c.right) / 2.0, (c.top + c.bottom) / 2.0, c.right - c.left,
                c.bottom - c.top);
  }

  // MOT-style top-left origin plus extent.
  static BBox from_ltwh(double left, double top, double w, double h) {
    return BBox(left + w / 2.0, top + h / 2.0, w, h);
  }

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }

  BBox translated(double dx, double dy) const { return BBox(cx_ + dx, cy_ + dy, w_, h_); }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double cx_;
  double cy_;
  double w_;
  double h_;
};

inline Corners to_corner(const BBox& b) {
  return {b.cx() - b.w() / 2.0, b.cy() - b.h() / 2.0, b.cx() + b.w() / 2.0,
          b.cy() + b.h() / 2.0};
}

inline BBox to_center(const Corners& c) { return BBox::from_corners(c); }

inline double area(const BBox& b) { return b.w() * b.h(); }

using Embedding = std::vector<double>;

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Returns v / |v|. A zero vector cannot be normalized.
inline Embedding normalized(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error("normalize: zero or non-finite vector");
  Embedding out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

inline constexpr double kUnitNormTolerance = 1e-6;

inline bool is_unit(std::span<const double> v, double tol = kUnitNormTolerance) {
  return std::abs(l2_norm(v) - 1.0) <= tol;
}

// One detector output. An empty embedding means "no identity feature".
struct Detection {
  BBox box;
  double confidence = 1.0;
  Embedding embedding;
  int frame = 1;

  bool has_embedding() const { return !embedding.empty(); }
};

// Throws if the detection breaks its invariants.
inline void validate(const Detection& d) {
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw Error("Detection: confidence outside [0,1]");
  }
  if (d.frame < 1) throw Error("Detection: frame index must be >= 1");
  if (d.has_embedding() && !is_unit(d.embedding)) {
    throw Error("Detection: embedding is not unit-norm");
  }
}

// Detections of one frame, in file order.
struct FrameDetections {
  int frame = 0;
  std::vector<Detection> detections;
};

using DetectionStream = std::vector<FrameDetections>;

// Multi-task objective weights; every term defaults to 1.
struct LossWeights {
  double cls = 1.0;
  double reg = 1.0;
  double tra = 1.0;
  double iden = 1.0;
};

}  // namespace idtrack

#endif  // IDTRACK_CORE_TYPES_HPP_

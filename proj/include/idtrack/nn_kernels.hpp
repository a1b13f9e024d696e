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

#ifndef IDTRACK_NN_KERNELS_HPP_
#define IDTRACK_NN_KERNELS_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "idtrack/core_types.hpp"

// Reference kernels for the learning-side components of the joint
// detection/identification/prediction network. Only the parameter-free
// pieces live here; learned layers are out of scope. For reference, the
// patch-summary stage downstream of `correlate` maps an h(2n+1) x w(2n+1)
// correlation map to an h x w x 512 tensor (kernel and stride 2n+1).

namespace idtrack::nn {

// Dense h x w x d tensor, channel-fastest.
class FeatureMap {
 public:
  FeatureMap(int h, int w, int d, double fill = 0.0) : h_(h), w_(w), d_(d) {
    if (h <= 0 || w <= 0 || d <= 0) throw Error("FeatureMap: dimensions must be positive");
    values_.assign(static_cast<std::size_t>(h) * w * d, fill);
  }

  int h() const { return h_; }
  int w() const { return w_; }
  int d() const { return d_; }

  double& at(int y, int x, int c) { return values_[index(y, x, c)]; }
  double at(int y, int x, int c) const { return values_[index(y, x, c)]; }

  // All d channels at one location.
  std::span<const double> pixel(int y, int x) const {
    return {values_.data() + index(y, x, 0), static_cast<std::size_t>(d_)};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * w_ + x) * d_ + c;
  }

  int h_, w_, d_;
  std::vector<double> values_;
};

// h(2n+1) x w(2n+1) map; the (2n+1)^2 block at (y, x) holds the correlations
// of f_prev(y, x) with the window of f_curr centred on (y, x).
class CorrelationMap {
 public:
  CorrelationMap(int h, int w, int n)
      : h_(h), w_(w), n_(n), values_(static_cast<std::size_t>(h) * w * (2 * n + 1) * (2 * n + 1), 0.0) {}

  int n() const { return n_; }
  int window() const { return 2 * n_ + 1; }
  int rows() const { return h_ * window(); }
  int cols() const { return w_ * window(); }

  double& at(int row, int col) { return values_[static_cast<std::size_t>(row) * cols() + col]; }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * cols() + col]; }

  // Entry for pixel (y, x) and displacement (dy, dx), each in [-n, n].
  double at_offset(int y, int x, int dy, int dx) const {
    return at(y * window() + dy + n_, x * window() + dx + n_);
  }

  std::span<const double> values() const { return values_; }

 private:
  int h_, w_, n_;
  std::vector<double> values_;
};

// Neighbourhood correlation with zero padding outside f_curr.
inline CorrelationMap correlate(const FeatureMap& f_prev, const FeatureMap& f_curr, int n) {
  if (f_prev.h() != f_curr.h() || f_prev.w() != f_curr.w() || f_prev.d() != f_curr.d()) {
    throw Error("correlate: feature map shapes differ");
  }
  if (n < 1) throw Error("correlate: window radius must be >= 1");
  const int h = f_prev.h();
  const int w = f_prev.w();
  const int k = 2 * n + 1;
  CorrelationMap out(h, w, n);
  for (int dy = -n; dy <= n; ++dy) {
    const int y_lo = std::max(0, -dy);
    const int y_hi = std::min(h, h - dy);
    for (int dx = -n; dx <= n; ++dx) {
      const int x_lo = std::max(0, -dx);
      const int x_hi = std::min(w, w - dx);
      for (int y = y_lo; y < y_hi; ++y) {
        for (int x = x_lo; x < x_hi; ++x) {
          out.at(y * k + dy + n, x * k + dx + n) = dot(f_prev.pixel(y, x), f_curr.pixel(y + dy, x + dx));
        }
      }
    }
  }
  return out;
}

// Inter-frame box regression targets: centre offsets and log size ratios.
struct MotionTargets {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

enum class TargetEncoding {
  kVerbatim,    // raw pixel centre offsets
  kNormalized,  // centre offsets divided by the previous box size
};

inline MotionTargets encode_targets(const BBox& prev, const BBox& curr,
                                    TargetEncoding enc = TargetEncoding::kVerbatim) {
  MotionTargets t;
  t.dx = curr.cx() - prev.cx();
  t.dy = curr.cy() - prev.cy();
  if (enc == TargetEncoding::kNormalized) {
    t.dx /= prev.w();
    t.dy /= prev.h();
  }
  t.dw = std::log(curr.w() / prev.w());
  t.dh = std::log(curr.h() / prev.h());
  return t;
}

inline BBox decode_targets(const BBox& prev, const MotionTargets& t,
                           TargetEncoding enc = TargetEncoding::kVerbatim) {
  double dx = t.dx;
  double dy = t.dy;
  if (enc == TargetEncoding::kNormalized) {
    dx *= prev.w();
    dy *= prev.h();
  }
  return BBox(prev.cx() + dx, prev.cy() + dy, prev.w() * std::exp(t.dw), prev.h() * std::exp(t.dh));
}

inline double smooth_l1(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw Error("smooth_l1: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - target[i]);
    s += e < 1.0 ? 0.5 * e * e : e - 0.5;
  }
  return s;
}

// Numerically stable softmax (max-subtracted).
inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

inline double softmax_cross_entropy(std::span<const double> logits, std::size_t true_class) {
  if (true_class >= logits.size()) throw Error("softmax_cross_entropy: class index out of range");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return std::log(z) - (logits[true_class] - m);
}

// D x T table of unit-norm identity prototypes (one column per identity).
class OimTable {
 public:
  OimTable(int dim, int identities, double momentum = 0.5, double scale = 1.0)
      : dim_(dim), count_(identities), momentum_(momentum), scale_(scale) {
    if (dim <= 0 || identities <= 0) throw Error("OimTable: dimensions must be positive");
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw Error("OimTable: momentum outside [0,1]");
    columns_.assign(static_cast<std::size_t>(dim) * identities, 0.0);
    // Deterministic unit start: column i is the basis vector e_(i mod D).
    for (int i = 0; i < identities; ++i) column_mut(i)[i % dim] = 1.0;
  }

  int dim() const { return dim_; }
  int identities() const { return count_; }
  double momentum() const { return momentum_; }
  double scale() const { return scale_; }

  std::span<const double> column(int i) const {
    return {columns_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }

  // Replaces column i with a copy of `v`, which must be unit-norm.
  void set_column(int i, std::span<const double> v) {
    check_index(i);
    if (static_cast<int>(v.size()) != dim_) throw Error("OimTable: column length mismatch");
    if (!is_unit(v)) throw Error("OimTable: column is not unit-norm");
    std::copy(v.begin(), v.end(), column_mut(i).begin());
  }

  void check_index(int i) const {
    if (i < 0 || i >= count_) throw Error("OimTable: identity index out of range");
  }

 private:
  std::span<double> column_mut(int i) {
    return {columns_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }

  int dim_;
  int count_;
  double momentum_;
  double scale_;
  std::vector<double> columns_;
};

struct OimResult {
  double loss = 0.0;
  std::vector<double> probs;
};

namespace detail {

inline void check_oim_input(std::span<const double> x, const OimTable& table, int true_id) {
  if (static_cast<int>(x.size()) != table.dim()) throw Error("oim: feature length mismatch");
  if (!is_unit(x)) throw Error("oim: feature is not unit-norm");
  table.check_index(true_id);
}

}  // namespace detail

// Softmax over scaled cosine scores against every prototype.
inline OimResult oim_forward(std::span<const double> x, const OimTable& table, int true_id) {
  detail::check_oim_input(x, table, true_id);
  std::vector<double> logits(table.identities());
  for (int i = 0; i < table.identities(); ++i) logits[i] = table.scale() * dot(table.column(i), x);
  OimResult r;
  r.loss = softmax_cross_entropy(logits, static_cast<std::size_t>(true_id));
  r.probs = softmax(logits);
  return r;
}

// d loss / d x = scale * V (probs - onehot(true_id)).
inline std::vector<double> oim_grad(std::span<const double> x, const OimTable& table, int true_id) {
  const OimResult r = oim_forward(x, table, true_id);
  std::vector<double> g(table.dim(), 0.0);
  for (int i = 0; i < table.identities(); ++i) {
    const double coeff = table.scale() * (r.probs[i] - (i == true_id ? 1.0 : 0.0));
    const auto col = table.column(i);
    for (int k = 0; k < table.dim(); ++k) g[k] += coeff * col[k];
  }
  return g;
}

// Moving-average update of the true identity's prototype, re-normalized.
inline OimTable oim_update(const OimTable& table, std::span<const double> x, int true_id) {
  detail::check_oim_input(x, table, true_id);
  OimTable out = table;
  const double mu = table.momentum();
  const auto old = table.column(true_id);
  std::vector<double> mixed(table.dim());
  for (int k = 0; k < table.dim(); ++k) mixed[k] = mu * old[k] + (1.0 - mu) * x[k];
  if (l2_norm(mixed) <= 1e-12) return out;  // opposed vectors at mu = 0.5: keep the old column
  out.set_column(true_id, normalized(mixed));
  return out;
}

struct RegressionTerm {
  double loss = 0.0;
  int gt_class = 1;  // 0 is background; only foreground terms count
};

struct LossCounts {
  double n = 0.0;
  double n_fg = 0.0;
  double n_tra = 0.0;
  double n_iden = 0.0;
};

// Weighted, normalized sum of the four task losses.
inline double multitask_loss(std::span<const double> cls, std::span<const RegressionTerm> reg,
                             std::span<const double> tra, std::span<const double> iden,
                             const LossCounts& counts, const LossWeights& weights = {}) {
  auto term = [](double sum, double count, bool present, const char* what) {
    if (!present) return 0.0;
    if (!(count > 0.0)) throw Error(std::string("multitask_loss: zero normalizer for ") + what);
    return sum / count;
  };
  double cls_sum = 0.0;
  for (double v : cls) cls_sum += v;
  double reg_sum = 0.0;
  bool any_fg = false;
  for (const RegressionTerm& r : reg) {
    if (r.gt_class > 0) {
      reg_sum += r.loss;
      any_fg = true;
    }
  }
  double tra_sum = 0.0;
  for (double v : tra) tra_sum += v;
  double iden_sum = 0.0;
  for (double v : iden) iden_sum += v;

  return weights.cls * term(cls_sum, counts.n, !cls.empty(), "classification") +
         weights.reg * term(reg_sum, counts.n_fg, any_fg, "regression") +
         weights.tra * term(tra_sum, counts.n_tra, !tra.empty(), "tracking") +
         weights.iden * term(iden_sum, counts.n_iden, !iden.empty(), "identification");
}

}  // namespace idtrack::nn

#endif  // IDTRACK_NN_KERNELS_HPP_

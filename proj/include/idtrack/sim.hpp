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

#ifndef IDTRACK_SIM_HPP_
#define IDTRACK_SIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "idtrack/core_types.hpp"
#include "idtrack/metrics.hpp"

namespace idtrack::sim {

// Counter-based generator: output k of stream (seed, stream) is
// splitmix64_mix(key + k * 0x9E3779B97F4A7C15) with
// key = splitmix64_mix(seed ^ splitmix64_mix(stream + 0xD1B54A32D192ED03)).
// Independent streams make every sub-draw reproducible in isolation.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0xD1B54A32D192ED03ULL))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller, one variate per call.
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Knuth's multiplication method; fine for the small rates used here.
  int poisson(double rate) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

  // Uniform direction on the unit sphere in R^dim.
  Embedding unit_vector(int dim) {
    Embedding v(static_cast<std::size_t>(dim));
    for (double& x : v) x = gaussian();
    return normalized(v);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct SimConfig {
  std::uint64_t seed = 42;
  int num_identities = 30;
  int frames = 500;
  double arena_width = 960.0;
  double arena_height = 540.0;
  double speed_min = 2.0;  // pixels per frame
  double speed_max = 6.0;
  double box_min = 40.0;  // pixels
  double box_max = 90.0;
  double center_noise = 1.0;  // pixels (std dev)
  double size_noise = 0.03;   // relative (std dev)
  double miss_rate = 0.02;
  double fp_rate = 0.5;  // expected false positives per frame
  int occlusion_events = 20;
  int occlusion_min = 5;  // frames
  int occlusion_max = 15;
  int embedding_dim = 128;
  double embedding_noise = 0.2;  // expected norm of the additive noise
  double kick_prob = 0.01;       // per-frame chance of a new heading
  int frame_stride = 1;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (num_identities < 0 || frames < 1) throw Error("SimConfig: bad identity/frame count");
    if (!(arena_width > 0.0 && arena_height > 0.0)) throw Error("SimConfig: bad arena");
    if (!(speed_min >= 0.0 && speed_max >= speed_min)) throw Error("SimConfig: bad speed range");
    if (!(box_min > 0.0 && box_max >= box_min)) throw Error("SimConfig: bad box size range");
    if (box_max >= std::min(arena_width, arena_height)) throw Error("SimConfig: boxes exceed arena");
    if (!(center_noise >= 0.0 && size_noise >= 0.0 && embedding_noise >= 0.0)) {
      throw Error("SimConfig: negative noise");
    }
    if (!prob(miss_rate) || !prob(kick_prob)) throw Error("SimConfig: probability outside [0,1]");
    if (!(fp_rate >= 0.0)) throw Error("SimConfig: negative false-positive rate");
    if (occlusion_events < 0 || occlusion_min < 1 || occlusion_max < occlusion_min) {
      throw Error("SimConfig: bad occlusion settings");
    }
    if (embedding_dim < 1) throw Error("SimConfig: embedding_dim must be >= 1");
    if (frame_stride < 1) throw Error("SimConfig: frame_stride must be >= 1");
  }
};

struct SimOutput {
  TrackStream gt;          // dense frames 1..N, confidence 1
  DetectionStream dets;    // same frames; embeddings attached
  std::vector<Embedding> prototypes;  // index = ground-truth id - 1
};

namespace detail {

inline void renumber(FrameObjects& f, int frame) { f.frame = frame; }

inline void renumber(FrameDetections& f, int frame) {
  f.frame = frame;
  for (Detection& d : f.detections) d.frame = frame;
}

}  // namespace detail

// Keeps frames 1, 1+stride, 1+2*stride, ... and renumbers them densely.
template <class Frame>
std::vector<Frame> subsample(const std::vector<Frame>& stream, int stride) {
  if (stride < 1) throw Error("subsample: stride must be >= 1");
  std::vector<Frame> out;
  for (const Frame& f : stream) {
    if ((f.frame - 1) % stride != 0) continue;
    Frame k = f;
    detail::renumber(k, (f.frame - 1) / stride + 1);
    out.push_back(std::move(k));
  }
  return out;
}

// Stream ids: identities use their index, the rest sit far above.
inline constexpr std::uint64_t kStreamOcclusion = 1ULL << 40;
inline constexpr std::uint64_t kStreamFrameBase = 1ULL << 41;
inline constexpr std::uint64_t kStreamPrototypeBase = 1ULL << 42;

// Ground truth and detections for a synthetic scene. The full timeline is
// always simulated and then subsampled by frame_stride, so the stride never
// changes what is drawn.
inline SimOutput generate(const SimConfig& cfg) {
  cfg.validate();
  const int n_frames = cfg.frames;
  SimOutput out;
  out.gt.resize(n_frames);
  out.dets.resize(n_frames);
  for (int f = 1; f <= n_frames; ++f) {
    out.gt[f - 1].frame = f;
    out.dets[f - 1].frame = f;
  }

  struct Span {
    int start, end;
  };
  std::vector<Span> spans;
  for (int id = 1; id <= cfg.num_identities; ++id) {
    CounterRng proto_rng(cfg.seed, kStreamPrototypeBase + id);
    out.prototypes.push_back(proto_rng.unit_vector(cfg.embedding_dim));

    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(id));
    const int start = 1 + static_cast<int>(rng.uniform() * 0.25 * n_frames);
    const int length = static_cast<int>(std::ceil(n_frames * rng.uniform(0.5, 1.0)));
    const int end = std::min(n_frames, start + length - 1);
    spans.push_back({start, end});

    const double w = rng.uniform(cfg.box_min, cfg.box_max);
    const double h = rng.uniform(cfg.box_min, cfg.box_max);
    const double x_lo = w / 2.0, x_hi = cfg.arena_width - w / 2.0;
    const double y_lo = h / 2.0, y_hi = cfg.arena_height - h / 2.0;
    double cx = rng.uniform(x_lo, x_hi);
    double cy = rng.uniform(y_lo, y_hi);
    const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double vx = speed * std::cos(heading);
    double vy = speed * std::sin(heading);

    for (int f = start; f <= end; ++f) {
      out.gt[f - 1].objects.push_back({id, BBox(cx, cy, w, h), 1.0});
      if (rng.uniform() < cfg.kick_prob) {
        heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
        vx = speed * std::cos(heading);
        vy = speed * std::sin(heading);
      }
      cx += vx;
      cy += vy;
      // Reflect off the arena walls.
      if (cx < x_lo) { cx = 2.0 * x_lo - cx; vx = -vx; }
      if (cx > x_hi) { cx = 2.0 * x_hi - cx; vx = -vx; }
      if (cy < y_lo) { cy = 2.0 * y_lo - cy; vy = -vy; }
      if (cy > y_hi) { cy = 2.0 * y_hi - cy; vy = -vy; }
    }
  }

  std::set<std::pair<int, int>> occluded;  // (id, frame)
  if (cfg.num_identities > 0) {
    CounterRng rng(cfg.seed, kStreamOcclusion);
    for (int e = 0; e < cfg.occlusion_events; ++e) {
      const int id = rng.uniform_int(1, cfg.num_identities);
      const Span s = spans[id - 1];
      const int first = rng.uniform_int(s.start, s.end);
      const int len = rng.uniform_int(cfg.occlusion_min, cfg.occlusion_max);
      for (int f = first; f < first + len && f <= s.end; ++f) occluded.insert({id, f});
    }
  }

  const double noise_scale = cfg.embedding_noise / std::sqrt(static_cast<double>(cfg.embedding_dim));
  for (int f = 1; f <= n_frames; ++f) {
    CounterRng rng(cfg.seed, kStreamFrameBase + f);
    std::vector<Detection>& dets = out.dets[f - 1].detections;
    for (const TrackedObject& o : out.gt[f - 1].objects) {
      // Fixed draw count per object keeps streams aligned across settings.
      const double u_miss = rng.uniform();
      const double ncx = rng.gaussian(), ncy = rng.gaussian();
      const double nw = rng.gaussian(), nh = rng.gaussian();
      const double conf = rng.uniform(0.5, 1.0);
      Embedding e = out.prototypes[o.id - 1];
      for (double& x : e) x += noise_scale * rng.gaussian();
      if (occluded.count({o.id, f}) || u_miss < cfg.miss_rate) continue;
      const BBox b(o.box.cx() + cfg.center_noise * ncx, o.box.cy() + cfg.center_noise * ncy,
                   std::max(1.0, o.box.w() * (1.0 + cfg.size_noise * nw)),
                   std::max(1.0, o.box.h() * (1.0 + cfg.size_noise * nh)));
      dets.push_back({b, conf, normalized(e), f});
    }
    const int n_fp = rng.poisson(cfg.fp_rate);
    for (int k = 0; k < n_fp; ++k) {
      const double w = rng.uniform(cfg.box_min, cfg.box_max);
      const double h = rng.uniform(cfg.box_min, cfg.box_max);
      const double cx = rng.uniform(w / 2.0, cfg.arena_width - w / 2.0);
      const double cy = rng.uniform(h / 2.0, cfg.arena_height - h / 2.0);
      const double conf = rng.uniform(0.05, 0.6);
      dets.push_back({BBox(cx, cy, w, h), conf, rng.unit_vector(cfg.embedding_dim), f});
    }
  }

  if (cfg.frame_stride > 1) {
    out.gt = subsample(out.gt, cfg.frame_stride);
    out.dets = subsample(out.dets, cfg.frame_stride);
  }
  return out;
}

}  // namespace idtrack::sim

#endif  // IDTRACK_SIM_HPP_

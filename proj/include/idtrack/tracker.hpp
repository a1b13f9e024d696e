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

#ifndef IDTRACK_TRACKER_HPP_
#define IDTRACK_TRACKER_HPP_

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "idtrack/affinity.hpp"
#include "idtrack/assignment.hpp"
#include "idtrack/core_types.hpp"

namespace idtrack {

struct Velocity {
  double vx = 0.0;
  double vy = 0.0;
};

struct Trajectory {
  int id = 0;
  BBox head_box;
  Embedding head_embedding;
  Velocity avg_velocity;  // pixels per frame
  int last_seen = 0;      // frame of the last matched detection
  int age = 1;            // number of matched detections
  int paused_for = 0;     // current_frame - last_seen
  BBox last_observed;     // detection box at last_seen; head_box may be propagated
  double confidence = 1.0;
  int propagated_for = 0;  // consecutive propagated frames since last match
};

// Box-motion prior for one trajectory at the frame being processed.
struct TrackPrediction {
  int track_id = 0;
  BBox box;
};

struct TrackOutput {
  int frame = 0;
  int id = 0;
  BBox box;
  double confidence = 0.0;
  bool interpolated = false;  // emitted from a prediction or linear propagation
};

struct TrackerConfig {
  AffinityWeights weights = AffinityWeights::balanced();
  int buffer_size = 10;
  double min_affinity = 0.2;
  double det_threshold = 0.5;
  int motion_propagate_frames = 5;
  double embedding_momentum = 0.5;
  int frame_gap = 1;
  double nms_threshold = 0.3;

  void validate() const {
    if (buffer_size < 1) throw Error("TrackerConfig: buffer_size must be >= 1");
    if (!(det_threshold >= 0.0 && det_threshold <= 1.0)) {
      throw Error("TrackerConfig: det_threshold outside [0,1]");
    }
    if (motion_propagate_frames < 0) {
      throw Error("TrackerConfig: motion_propagate_frames must be >= 0");
    }
    if (!(embedding_momentum >= 0.0 && embedding_momentum <= 1.0)) {
      throw Error("TrackerConfig: embedding_momentum outside [0,1]");
    }
    if (frame_gap < 1) throw Error("TrackerConfig: frame_gap must be >= 1");
    if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) {
      throw Error("TrackerConfig: nms_threshold outside [0,1]");
    }
  }
};

// Head box advanced by `frames` times the average velocity.
inline BBox propagate_linear(const Trajectory& t, int frames = 1) {
  return t.head_box.translated(t.avg_velocity.vx * frames, t.avg_velocity.vy * frames);
}

// Absorbs a matched detection into a trajectory. Appearance and velocity are
// exponential moving averages with weight `momentum` on the old value.
inline Trajectory update_trajectory(const Trajectory& traj, const Detection& det, double momentum) {
  Trajectory out = traj;
  const int elapsed = std::max(1, det.frame - traj.last_seen);
  const double dx = (det.box.cx() - traj.last_observed.cx()) / elapsed;
  const double dy = (det.box.cy() - traj.last_observed.cy()) / elapsed;
  out.avg_velocity.vx = momentum * traj.avg_velocity.vx + (1.0 - momentum) * dx;
  out.avg_velocity.vy = momentum * traj.avg_velocity.vy + (1.0 - momentum) * dy;

  if (det.has_embedding()) {
    if (traj.head_embedding.size() != det.embedding.size()) {
      out.head_embedding = det.embedding;
    } else {
      Embedding mixed(det.embedding.size());
      for (std::size_t k = 0; k < mixed.size(); ++k) {
        mixed[k] = momentum * traj.head_embedding[k] + (1.0 - momentum) * det.embedding[k];
      }
      // Exactly opposed features cancel out; fall back to the fresh one.
      out.head_embedding = l2_norm(mixed) > 1e-12 ? normalized(mixed) : det.embedding;
    }
  }
  out.head_box = det.box;
  out.last_observed = det.box;
  out.last_seen = det.frame;
  out.age = traj.age + 1;
  out.paused_for = 0;
  out.propagated_for = 0;
  out.confidence = det.confidence;
  return out;
}

// Online tracker: per-frame Hungarian association on combined box/identity
// affinity, identity-only recovery from a bounded buffer of paused
// trajectories, and motion propagation for unmatched trajectories.
//
// Trajectory grouping at frame t, with s = steps since last match
// (frames / frame_gap):
//   level 1          s <= 1 + motion_propagate_frames, combined weights
//   level j (2..B)   s == j and still unmatched, identity-only weights
//   retired          s > buffer_size (B)
class Tracker {
 public:
  explicit Tracker(TrackerConfig config) : config_(std::move(config)) { config_.validate(); }

  const TrackerConfig& config() const { return config_; }
  int current_frame() const { return current_frame_; }
  int next_id() const { return next_id_; }

  // All trajectories not yet retired, ordered by id.
  const std::vector<Trajectory>& trajectories() const { return tracks_; }

  // Trajectories that take part in the combined-affinity match at `frame`.
  std::vector<Trajectory> active(int frame) const {
    std::vector<Trajectory> out;
    for (const Trajectory& t : tracks_) {
      const int s = steps_since(t, frame);
      if (s <= config_.buffer_size && s <= 1 + config_.motion_propagate_frames) out.push_back(t);
    }
    return out;
  }

  // Processes one frame. `dets` must already be thresholded and suppressed.
  // `predictions` carry per-trajectory box priors for this frame, keyed by id.
  std::vector<TrackOutput> step(int frame, std::span<const Detection> dets,
                                std::span<const TrackPrediction> predictions = {}) {
    if (frame <= current_frame_) throw Error("Tracker::step: frame index must increase");
    for (const Detection& d : dets) {
      validate(d);
      if (d.frame != frame) throw Error("Tracker::step: detection frame mismatch");
    }
    const int elapsed = current_frame_ > 0 ? frame - current_frame_ : 1;

    std::erase_if(tracks_,
                  [&](const Trajectory& t) { return steps_since(t, frame) > config_.buffer_size; });

    for (const TrackPrediction& p : predictions) {
      if (Trajectory* t = find(p.track_id)) t->head_box = p.box;
    }

    std::vector<char> track_matched(tracks_.size(), 0);
    std::vector<char> det_used(dets.size(), 0);
    std::vector<int> det_track(dets.size(), -1);

    auto match_level = [&](const std::vector<std::size_t>& cand, const AffinityWeights& w) {
      std::vector<std::size_t> free_dets;
      for (std::size_t j = 0; j < dets.size(); ++j) {
        if (!det_used[j]) free_dets.push_back(j);
      }
      if (cand.empty() || free_dets.empty()) return;
      std::vector<Trajectory> heads;
      heads.reserve(cand.size());
      for (std::size_t i : cand) heads.push_back(tracks_[i]);
      std::vector<Detection> sub;
      sub.reserve(free_dets.size());
      for (std::size_t j : free_dets) sub.push_back(dets[j]);
      const AffinityMatrix a = combined_affinity(heads, sub, w);
      const Assignment sol = solve_max(a, config_.min_affinity);
      for (const auto& [r, c] : sol.pairs) {
        const std::size_t ti = cand[r];
        const std::size_t dj = free_dets[c];
        tracks_[ti] = update_trajectory(tracks_[ti], dets[dj], config_.embedding_momentum);
        track_matched[ti] = 1;
        det_used[dj] = 1;
        det_track[dj] = tracks_[ti].id;
      }
    };

    // Steps 1-4: tracks seen in the previous step or still being propagated.
    std::vector<std::size_t> level1;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (steps_since(tracks_[i], frame) <= 1 + config_.motion_propagate_frames) level1.push_back(i);
    }
    match_level(level1, config_.weights);

    // Step 5: identity-only recovery, most recent buffer level first. Without
    // identity features (w2 == 0) there is nothing to recover with.
    if (config_.weights.w2() > 0.0) {
      for (int j = 2; j <= config_.buffer_size; ++j) {
        std::vector<std::size_t> level;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
          if (!track_matched[i] && steps_since(tracks_[i], frame) == j) level.push_back(i);
        }
        match_level(level, AffinityWeights::id_only());
      }
    }

    std::vector<TrackOutput> out;

    // Step 6: births.
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (det_used[j]) continue;
      Trajectory t{.id = next_id_++,
                   .head_box = dets[j].box,
                   .head_embedding = dets[j].embedding,
                   .avg_velocity = {},
                   .last_seen = frame,
                   .age = 1,
                   .paused_for = 0,
                   .last_observed = dets[j].box,
                   .confidence = dets[j].confidence,
                   .propagated_for = 0};
      det_track[j] = t.id;
      tracks_.push_back(std::move(t));
      track_matched.push_back(1);
    }
    for (std::size_t j = 0; j < dets.size(); ++j) {
      out.push_back({frame, det_track[j], dets[j].box, dets[j].confidence, false});
    }

    // Step 7: unmatched tracks take their prediction, else linear motion, for
    // a bounded number of frames; afterwards the head stays frozen.
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (track_matched[i]) continue;
      Trajectory& t = tracks_[i];
      const bool predicted = has_prediction(predictions, t.id);
      if (t.propagated_for < config_.motion_propagate_frames) {
        if (!predicted) t.head_box = propagate_linear(t, elapsed);
        ++t.propagated_for;
        out.push_back({frame, t.id, t.head_box, t.confidence, true});
      }
    }

    current_frame_ = frame;
    for (Trajectory& t : tracks_) t.paused_for = frame - t.last_seen;
    std::sort(tracks_.begin(), tracks_.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.id < b.id; });
    std::sort(out.begin(), out.end(),
              [](const TrackOutput& a, const TrackOutput& b) { return a.id < b.id; });
    return out;
  }

 private:
  int steps_since(const Trajectory& t, int frame) const {
    return (frame - t.last_seen + config_.frame_gap - 1) / config_.frame_gap;
  }

  Trajectory* find(int id) {
    for (Trajectory& t : tracks_) {
      if (t.id == id) return &t;
    }
    return nullptr;
  }

  static bool has_prediction(std::span<const TrackPrediction> preds, int id) {
    return std::any_of(preds.begin(), preds.end(),
                       [&](const TrackPrediction& p) { return p.track_id == id; });
  }

  TrackerConfig config_;
  std::vector<Trajectory> tracks_;
  int next_id_ = 1;
  int current_frame_ = 0;
};

}  // namespace idtrack

#endif  // IDTRACK_TRACKER_HPP_

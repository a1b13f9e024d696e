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

#ifndef IDTRACK_PIPELINE_HPP_
#define IDTRACK_PIPELINE_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "idtrack/affinity.hpp"
#include "idtrack/metrics.hpp"
#include "idtrack/sim.hpp"
#include "idtrack/tracker.hpp"

namespace idtrack {

// Supplies box priors for the trajectories of `tracker` at `frame`.
using PredictionSource = std::function<std::vector<TrackPrediction>(int frame, const Tracker& tracker)>;

// Confidence filter followed by NMS, as applied before every tracker step.
inline std::vector<Detection> prepare_detections(std::span<const Detection> dets,
                                                 const TrackerConfig& cfg) {
  std::vector<Detection> kept;
  for (const Detection& d : dets) {
    if (d.confidence >= cfg.det_threshold) kept.push_back(d);
  }
  return nms(kept, cfg.nms_threshold);
}

// Runs a fresh tracker over a whole sequence. Frames missing from `stream`
// between its first and last frame (on the frame_gap grid) are stepped with
// no detections.
inline std::vector<TrackOutput> run_tracking(const DetectionStream& stream, const TrackerConfig& cfg,
                                             const PredictionSource& predict = {}) {
  std::vector<TrackOutput> all;
  if (stream.empty()) return all;
  std::map<int, const FrameDetections*> by_frame;
  for (const FrameDetections& f : stream) by_frame[f.frame] = &f;
  const int first = by_frame.begin()->first;
  const int last = by_frame.rbegin()->first;
  Tracker tracker(cfg);
  static const std::vector<Detection> kNone;
  for (int frame = first; frame <= last; frame += cfg.frame_gap) {
    const auto it = by_frame.find(frame);
    std::vector<Detection> raw = it != by_frame.end() ? it->second->detections : kNone;
    for (Detection& d : raw) d.frame = frame;
    const std::vector<Detection> dets = prepare_detections(raw, cfg);
    std::vector<TrackPrediction> preds;
    if (predict) preds = predict(frame, tracker);
    std::vector<TrackOutput> out = tracker.step(frame, dets, preds);
    all.insert(all.end(), out.begin(), out.end());
  }
  return all;
}

inline TrackStream to_track_stream(const std::vector<TrackOutput>& outputs,
                                   bool include_interpolated = false) {
  std::map<int, std::vector<TrackedObject>> by_frame;
  for (const TrackOutput& o : outputs) {
    if (o.interpolated && !include_interpolated) continue;
    by_frame[o.frame].push_back({o.id, o.box, o.confidence});
  }
  TrackStream s;
  for (auto& [f, objs] : by_frame) s.push_back({f, std::move(objs)});
  return s;
}

// Stand-in for a learned inter-frame box regressor, driven by ground truth.
// A trajectory is tied to the ground-truth object its head overlaps most at
// the previous frame; if that object moves by at most `max_displacement`
// pixels, its true box at the current frame (plus Gaussian noise) is
// returned. Larger motions fall outside the correlation window and yield no
// prediction.
class GroundTruthPredictor {
 public:
  GroundTruthPredictor(const TrackStream& gt, double max_displacement = 32.0,
                       double noise_sigma = 1.0, std::uint64_t seed = 7)
      : max_displacement_(max_displacement), noise_sigma_(noise_sigma), seed_(seed) {
    for (const FrameObjects& f : gt) frames_[f.frame] = f.objects;
  }

  std::vector<TrackPrediction> operator()(int frame, const Tracker& tracker) const {
    std::vector<TrackPrediction> out;
    const auto prev = frames_.find(tracker.current_frame());
    const auto cur = frames_.find(frame);
    if (prev == frames_.end() || cur == frames_.end()) return out;
    for (const Trajectory& t : tracker.active(frame)) {
      const TrackedObject* best = nullptr;
      double best_iou = 0.5;
      for (const TrackedObject& o : prev->second) {
        const double v = iou(t.head_box, o.box);
        if (v >= best_iou) {
          best_iou = v;
          best = &o;
        }
      }
      if (best == nullptr) continue;
      for (const TrackedObject& o : cur->second) {
        if (o.id != best->id) continue;
        const double dx = o.box.cx() - best->box.cx();
        const double dy = o.box.cy() - best->box.cy();
        if (std::hypot(dx, dy) > max_displacement_) break;
        sim::CounterRng rng(seed_, (static_cast<std::uint64_t>(frame) << 24) + t.id);
        const double nx = noise_sigma_ * rng.gaussian();
        const double ny = noise_sigma_ * rng.gaussian();
        out.push_back({t.id, BBox(o.box.cx() + nx, o.box.cy() + ny, o.box.w(), o.box.h())});
        break;
      }
    }
    return out;
  }

 private:
  std::map<int, std::vector<TrackedObject>> frames_;
  double max_displacement_;
  double noise_sigma_;
  std::uint64_t seed_;
};

struct AblationModel {
  std::string name;
  TrackerConfig config;
  bool use_predictions = false;
};

// Detection-only IoU association, IoU plus box predictions, identity-aware
// association without and with predictions.
inline std::vector<AblationModel> default_ablation_models(const TrackerConfig& base = {}) {
  TrackerConfig iou_cfg = base;
  iou_cfg.weights = AffinityWeights::iou_only();
  TrackerConfig id_cfg = base;
  id_cfg.weights = AffinityWeights::balanced();
  return {
      {"Det + IoU Asso.", iou_cfg, false},
      {"Det + Pred + IoU Asso.", iou_cfg, true},
      {"Det + Iden + ID Asso.", id_cfg, false},
      {"Det + Pred + Iden + ID Asso.", id_cfg, true},
  };
}

struct AblationRow {
  std::string model;
  int stride = 1;
  SweepResult sweep;
};

// Tracks and evaluates `model` on one generated sequence, once per
// detection threshold.
inline SweepResult sweep_model(const sim::SimOutput& data, const AblationModel& model,
                               const std::vector<double>& thresholds, double iou_gate = 0.5) {
  GroundTruthPredictor predictor(data.gt);
  PredictionSource source;
  if (model.use_predictions) source = std::cref(predictor);
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    TrackerConfig cfg = model.config;
    cfg.det_threshold = t;
    const std::vector<TrackOutput> out = run_tracking(data.dets, cfg, source);
    rows.push_back({t, evaluate(data.gt, to_track_stream(out), iou_gate)});
  }
  return summarize_sweep(std::move(rows));
}

// Runs every model at every stride on the scene described by `base`.
inline std::vector<AblationRow> run_ablation(const sim::SimConfig& base, const std::vector<int>& strides,
                                             const std::vector<AblationModel>& models,
                                             const std::vector<double>& thresholds = default_thresholds()) {
  std::vector<AblationRow> rows;
  for (int stride : strides) {
    sim::SimConfig cfg = base;
    cfg.frame_stride = stride;
    const sim::SimOutput data = sim::generate(cfg);
    for (const AblationModel& m : models) rows.push_back({m.name, stride, sweep_model(data, m, thresholds)});
  }
  return rows;
}

// Two blocks: per-metric best over thresholds, then the best-MOTA row.
inline std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::string s = "# per-metric best across detection thresholds\n";
  s += format_table_header("Model", "stride");
  for (const AblationRow& r : rows) {
    s += format_table_row(r.model, r.sweep.per_metric_best, std::to_string(r.stride));
  }
  s += "\n# single operating point with the highest MOTA\n";
  s += format_table_header("Model", "stride threshold");
  for (const AblationRow& r : rows) {
    char extra[64];
    std::snprintf(extra, sizeof extra, "%d %.2f", r.stride, r.sweep.best_mota.threshold);
    s += format_table_row(r.model, r.sweep.best_mota.report, extra);
  }
  return s;
}

}  // namespace idtrack

#endif  // IDTRACK_PIPELINE_HPP_

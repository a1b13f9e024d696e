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

// Command-line front end: track, eval, simulate, ablate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idtrack/io.hpp"
#include "idtrack/metrics.hpp"
#include "idtrack/pipeline.hpp"
#include "idtrack/sim.hpp"
#include "idtrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace idtrack;

namespace {

constexpr int kUsageError = 2;

struct TrackArgs {
  std::string dets, embeddings, predictions, config, out, preset;
  std::optional<double> w1, w2, min_affinity, det_threshold, nms, momentum;
  std::optional<int> buffer_size, propagate_frames, frame_gap;
  int frame_stride = 1;
  bool write_interpolated = false;
};

struct EvalArgs {
  std::string gt, hyp, format = "table", report;
  double iou_gate = 0.5;
  bool sweep = false;
  int frame_stride = 1;
};

struct SimulateArgs {
  std::string config, out_dir;
};

struct AblateArgs {
  std::string config, out;
  std::vector<int> strides{1, 10};
  std::vector<double> thresholds = default_thresholds();
};

template <class T>
void put(io::KeyValues& kv, const char* key, const std::optional<T>& v) {
  if (!v) return;
  std::ostringstream s;
  s.precision(17);
  s << *v;
  kv[key] = s.str();
}

// Defaults, then the config file, then explicit flags.
TrackerConfig build_tracker_config(const TrackArgs& a) {
  TrackerConfig cfg;
  if (!a.config.empty()) io::apply(io::read_key_values(a.config), cfg);
  io::KeyValues kv;
  if (!a.preset.empty()) kv["preset"] = a.preset;
  std::optional<double> w1 = a.w1, w2 = a.w2;
  if (w1 && !w2) w2 = 1.0 - *w1;
  if (w2 && !w1) w1 = 1.0 - *w2;
  put(kv, "w1", w1);
  put(kv, "w2", w2);
  put(kv, "min_affinity", a.min_affinity);
  put(kv, "det_threshold", a.det_threshold);
  put(kv, "nms_threshold", a.nms);
  put(kv, "embedding_momentum", a.momentum);
  put(kv, "buffer_size", a.buffer_size);
  put(kv, "motion_propagate_frames", a.propagate_frames);
  put(kv, "frame_gap", a.frame_gap);
  io::apply(kv, cfg);
  return cfg;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

int run_track(const TrackArgs& a) {
  const TrackerConfig cfg = build_tracker_config(a);
  DetectionStream dets = io::read_detections(a.dets);
  if (!a.embeddings.empty()) io::attach_embeddings(dets, io::read_embeddings(a.embeddings, warn));
  if (cfg.weights.w2() > 0.0) {
    for (const FrameDetections& f : dets) {
      for (const Detection& d : f.detections) {
        if (!d.has_embedding()) {
          throw Error("frame " + std::to_string(f.frame) +
                      ": detection without embedding but w2 > 0 (pass --embeddings)");
        }
      }
    }
  }
  io::PredictionTable preds;
  if (!a.predictions.empty()) preds = io::read_predictions(a.predictions);
  if (a.frame_stride > 1) {
    dets = sim::subsample(dets, a.frame_stride);
    io::PredictionTable strided;
    for (auto& [f, p] : preds) {
      if ((f - 1) % a.frame_stride == 0) strided[(f - 1) / a.frame_stride + 1] = p;
    }
    preds = std::move(strided);
  }
  PredictionSource source;
  if (!preds.empty()) {
    source = [&preds](int frame, const Tracker&) {
      const auto it = preds.find(frame);
      return it != preds.end() ? it->second : std::vector<TrackPrediction>{};
    };
  }
  const std::vector<TrackOutput> out = run_tracking(dets, cfg, source);
  io::write_results(a.out, out, a.write_interpolated);
  return 0;
}

int run_eval(const EvalArgs& a) {
  TrackStream gt = io::read_tracks(a.gt);
  if (a.frame_stride > 1) gt = sim::subsample(gt, a.frame_stride);
  const TrackStream hyp = io::read_tracks(a.hyp);
  std::ostringstream text, kv;
  if (a.sweep) {
    const SweepResult s = sweep_thresholds(gt, hyp, default_thresholds(), a.iou_gate);
    text << format_table_header("Threshold");
    for (const SweepRow& r : s.rows) {
      char label[32];
      std::snprintf(label, sizeof label, "%.1f", r.threshold);
      text << format_table_row(label, r.report);
      std::snprintf(label, sizeof label, "t%.1f.", r.threshold);
      kv << format_key_values(r.report, label);
    }
    text << format_table_row("per-metric best", s.per_metric_best);
    char label[32];
    std::snprintf(label, sizeof label, "best MOTA (t=%.1f)", s.best_mota.threshold);
    text << format_table_row(label, s.best_mota.report);
    kv << format_key_values(s.per_metric_best, "best.");
    kv << "best_mota.threshold=" << s.best_mota.threshold << "\n";
    kv << format_key_values(s.best_mota.report, "best_mota.");
  } else {
    const MotReport r = evaluate(gt, hyp, a.iou_gate);
    text << format_table_header("Sequence") << format_table_row(fs::path(a.hyp).filename().string(), r);
    kv << format_key_values(r);
  }
  std::cout << (a.format == "kv" ? kv.str() : text.str());
  if (!a.report.empty()) {
    std::ofstream f(a.report, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + a.report);
    f << kv.str();
  }
  return 0;
}

sim::SimConfig load_sim_config(const std::string& path) {
  sim::SimConfig cfg;
  if (!path.empty()) io::apply(io::read_key_values(path), cfg);
  if (const char* env = std::getenv("IDTRACK_SEED"); env != nullptr && *env != '\0') {
    cfg.seed = io::parse_seed(env);
  }
  cfg.validate();
  return cfg;
}

int run_simulate(const SimulateArgs& a) {
  const sim::SimConfig cfg = load_sim_config(a.config);
  const sim::SimOutput data = sim::generate(cfg);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  io::write_tracks(dir / "gt.txt", data.gt);
  io::write_detections(dir / "det.txt", data.dets);
  io::write_embeddings(dir / "embeddings.txt", data.dets);
  std::ofstream f(dir / "sim.cfg", std::ios::binary | std::ios::trunc);
  f << io::format_key_values(cfg);
  if (!f) throw Error("cannot write " + (dir / "sim.cfg").string());
  return 0;
}

int run_ablate(const AblateArgs& a) {
  const sim::SimConfig cfg = load_sim_config(a.config);
  const auto rows = run_ablation(cfg, a.strides, default_ablation_models(), a.thresholds);
  const std::string table = format_ablation(rows);
  std::cout << table;
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + a.out);
    f << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"idtrack: online multi-object tracking with identity-aware association"};
  app.require_subcommand(1);

  TrackArgs ta;
  auto* track = app.add_subcommand("track", "Link per-frame detections into trajectories");
  track->add_option("--dets", ta.dets, "Detections, MOT format")->required()->check(CLI::ExistingFile);
  track->add_option("--embeddings", ta.embeddings, "Identity features sidecar")->check(CLI::ExistingFile);
  track->add_option("--predictions", ta.predictions, "Per-track box priors, MOT format")
      ->check(CLI::ExistingFile);
  track->add_option("--config", ta.config, "key=value tracker settings")->check(CLI::ExistingFile);
  track->add_option("--preset", ta.preset, "Weight preset")
      ->check(CLI::IsMember({"default", "mot16", "iou"}));
  track->add_option("--w1", ta.w1, "Weight of box IoU");
  track->add_option("--w2", ta.w2, "Weight of identity similarity");
  track->add_option("--buffer-size", ta.buffer_size, "Frames a lost trajectory stays recoverable");
  track->add_option("--min-affinity", ta.min_affinity, "Lowest affinity accepted as a match");
  track->add_option("--det-threshold", ta.det_threshold, "Detection confidence cut");
  track->add_option("--nms", ta.nms, "NMS IoU threshold");
  track->add_option("--momentum", ta.momentum, "Appearance/velocity moving-average weight");
  track->add_option("--propagate-frames", ta.propagate_frames, "Linear-motion horizon");
  track->add_option("--frame-gap", ta.frame_gap, "Frames between processed frames");
  track->add_option("--frame-stride", ta.frame_stride, "Keep every k-th frame (renumbered)")
      ->check(CLI::PositiveNumber);
  track->add_flag("--write-interpolated", ta.write_interpolated, "Also write propagated boxes");
  track->add_option("--out", ta.out, "Output MOT file")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "CLEAR-MOT evaluation");
  eval->add_option("--gt", ea.gt, "Ground truth, MOT format")->required()->check(CLI::ExistingFile);
  eval->add_option("--hyp", ea.hyp, "Tracker output, MOT format")->required()->check(CLI::ExistingFile);
  eval->add_option("--iou-gate", ea.iou_gate, "Minimum IoU for a match");
  eval->add_flag("--sweep", ea.sweep, "Sweep confidence thresholds 0.1..0.9");
  eval->add_option("--frame-stride", ea.frame_stride, "Subsample ground truth to match `track`")
      ->check(CLI::PositiveNumber);
  eval->add_option("--format", ea.format, "stdout format")->check(CLI::IsMember({"table", "kv"}));
  eval->add_option("--report", ea.report, "Also write key=value report here");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic sequence");
  simulate->add_option("--config", sa.config, "key=value simulator settings")->check(CLI::ExistingFile);
  simulate->add_option("--out-dir", sa.out_dir, "Directory for gt/det/embeddings")->required();

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Compare association models across frame strides");
  ablate->add_option("--config", aa.config, "key=value simulator settings")->check(CLI::ExistingFile);
  ablate->add_option("--strides", aa.strides, "Frame strides")->delimiter(',');
  ablate->add_option("--thresholds", aa.thresholds, "Detection thresholds")->delimiter(',');
  ablate->add_option("--out", aa.out, "Also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*track) return run_track(ta);
    if (*eval) return run_eval(ea);
    if (*simulate) return run_simulate(sa);
    if (*ablate) return run_ablate(aa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsageError;
}

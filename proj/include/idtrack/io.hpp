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

#ifndef IDTRACK_IO_HPP_
#define IDTRACK_IO_HPP_

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idtrack/core_types.hpp"
#include "idtrack/metrics.hpp"
#include "idtrack/sim.hpp"
#include "idtrack/tracker.hpp"

// Text formats:
//   MOT lines   frame,id,left,top,width,height,conf,x,y,z   (id -1 for detections)
//   embeddings  header "dim=D", then frame,det_index,v_1,...,v_D
//   key=value   one setting per line, '#' starts a comment
namespace idtrack::io {

using WarningSink = std::function<void(const std::string&)>;

namespace detail {

inline std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && errno == 0 && std::isfinite(out);
}

inline bool parse_int(std::string_view s, int& out) {
  double d = 0.0;
  if (!parse_double(s, d) || d != std::floor(d) || std::abs(d) > 2e9) return false;
  out = static_cast<int>(d);
  return true;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct MotRecord {
  int frame = 0;
  int id = -1;
  BBox box;
  double conf = 1.0;
};

template <class Fn>
void for_each_mot_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t, ',');
    if (fields.size() < 6) throw Error(where(path, line_no) + "expected at least 6 fields");
    int frame = 0, id = 0;
    double v[4];
    double conf = 1.0;
    if (!parse_int(fields[0], frame) || frame < 1) throw Error(where(path, line_no) + "bad frame");
    if (!parse_int(fields[1], id)) throw Error(where(path, line_no) + "bad id");
    for (int k = 0; k < 4; ++k) {
      if (!parse_double(fields[2 + k], v[k])) throw Error(where(path, line_no) + "bad box field");
    }
    if (fields.size() > 6 && !parse_double(fields[6], conf)) {
      throw Error(where(path, line_no) + "bad confidence");
    }
    if (!(v[2] > 0.0) || !(v[3] > 0.0)) throw Error(where(path, line_no) + "non-positive box size");
    fn(MotRecord{frame, id, BBox::from_ltwh(v[0], v[1], v[2], v[3]), conf}, line_no);
  }
}

}  // namespace detail

// Detections grouped by frame (ascending), file order kept within a frame.
inline DetectionStream read_detections(const std::filesystem::path& path) {
  std::map<int, std::vector<Detection>> by_frame;
  detail::for_each_mot_record(path, [&](const detail::MotRecord& r, std::size_t line_no) {
    if (!(r.conf >= 0.0 && r.conf <= 1.0)) {
      throw Error(detail::where(path, line_no) + "confidence outside [0,1]");
    }
    by_frame[r.frame].push_back({r.box, r.conf, {}, r.frame});
  });
  DetectionStream out;
  for (auto& [frame, dets] : by_frame) out.push_back({frame, std::move(dets)});
  return out;
}

// Labelled boxes (ground truth or tracker output) grouped by frame.
inline TrackStream read_tracks(const std::filesystem::path& path) {
  std::map<int, std::vector<TrackedObject>> by_frame;
  detail::for_each_mot_record(path, [&](const detail::MotRecord& r, std::size_t) {
    by_frame[r.frame].push_back({r.id, r.box, r.conf});
  });
  TrackStream out;
  for (auto& [frame, objs] : by_frame) out.push_back({frame, std::move(objs)});
  return out;
}

inline std::string format_mot_line(int frame, int id, const BBox& b, double conf) {
  const Corners c = to_corner(b);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,-1,-1,-1\n", frame, id, c.left,
                c.top, b.w(), b.h(), conf);
  return buf;
}

// Tracker output in MOT format, ordered by (frame, id). Interpolated boxes
// are skipped unless requested.
inline void write_results(const std::filesystem::path& path, const std::vector<TrackOutput>& outputs,
                          bool include_interpolated = false) {
  std::vector<const TrackOutput*> rows;
  for (const TrackOutput& o : outputs) {
    if (o.id < 1) throw Error("write_results: track ids must be >= 1");
    if (o.interpolated && !include_interpolated) continue;
    rows.push_back(&o);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TrackOutput* a, const TrackOutput* b) {
    return a->frame != b->frame ? a->frame < b->frame : a->id < b->id;
  });
  std::ofstream out = detail::open_out(path);
  for (const TrackOutput* o : rows) out << format_mot_line(o->frame, o->id, o->box, o->confidence);
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_tracks(const std::filesystem::path& path, const TrackStream& stream) {
  std::ofstream out = detail::open_out(path);
  for (const FrameObjects& f : stream) {
    for (const TrackedObject& o : f.objects) out << format_mot_line(f.frame, o.id, o.box, o.confidence);
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_detections(const std::filesystem::path& path, const DetectionStream& stream) {
  std::ofstream out = detail::open_out(path);
  for (const FrameDetections& f : stream) {
    for (const Detection& d : f.detections) out << format_mot_line(f.frame, -1, d.box, d.confidence);
  }
  if (!out) throw Error("write failed: " + path.string());
}

// Sidecar embeddings keyed by (frame, 0-based index within the frame).
inline void write_embeddings(const std::filesystem::path& path, const DetectionStream& stream) {
  std::size_t dim = 0;
  for (const FrameDetections& f : stream) {
    for (const Detection& d : f.detections) {
      if (!d.has_embedding()) throw Error("write_embeddings: detection without embedding");
      if (dim == 0) dim = d.embedding.size();
      if (d.embedding.size() != dim) throw Error("write_embeddings: inconsistent dimension");
    }
  }
  std::ofstream out = detail::open_out(path);
  out << "dim=" << dim << "\n";
  char buf[64];
  for (const FrameDetections& f : stream) {
    for (std::size_t i = 0; i < f.detections.size(); ++i) {
      out << f.frame << "," << i;
      for (double v : f.detections[i].embedding) {
        std::snprintf(buf, sizeof buf, ",%.9g", v);
        out << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

using EmbeddingTable = std::map<std::pair<int, int>, Embedding>;

// Vectors are L2-normalized on read; a norm off by more than 1e-3 is
// reported through `warn`.
inline EmbeddingTable read_embeddings(const std::filesystem::path& path, const WarningSink& warn = {}) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  EmbeddingTable table;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (dim == 0) {
      int d = 0;
      if (t.substr(0, 4) != "dim=" || !detail::parse_int(t.substr(4), d) || d < 1) {
        throw Error(detail::where(path, line_no) + "expected header dim=D");
      }
      dim = static_cast<std::size_t>(d);
      continue;
    }
    const auto fields = detail::split(t, ',');
    if (fields.size() != dim + 2) {
      throw Error(detail::where(path, line_no) + "expected " + std::to_string(dim + 2) + " fields");
    }
    int frame = 0, index = 0;
    if (!detail::parse_int(fields[0], frame) || frame < 1 || !detail::parse_int(fields[1], index) ||
        index < 0) {
      throw Error(detail::where(path, line_no) + "bad frame or detection index");
    }
    Embedding v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!detail::parse_double(fields[k + 2], v[k])) {
        throw Error(detail::where(path, line_no) + "bad embedding value");
      }
    }
    const double n = l2_norm(v);
    if (!(n > 0.0)) throw Error(detail::where(path, line_no) + "zero embedding");
    if (std::abs(n - 1.0) > 1e-3 && warn) {
      warn(detail::where(path, line_no) + "embedding norm " + std::to_string(n) + ", normalizing");
    }
    if (!table.emplace(std::make_pair(frame, index), normalized(v)).second) {
      throw Error(detail::where(path, line_no) + "duplicate (frame, index)");
    }
  }
  return table;
}

// Returns the number of detections that received an embedding.
inline std::size_t attach_embeddings(DetectionStream& stream, const EmbeddingTable& table) {
  std::size_t n = 0;
  for (FrameDetections& f : stream) {
    for (std::size_t i = 0; i < f.detections.size(); ++i) {
      const auto it = table.find({f.frame, static_cast<int>(i)});
      if (it == table.end()) continue;
      f.detections[i].embedding = it->second;
      ++n;
    }
  }
  return n;
}

// Per-frame box priors keyed by trajectory id (MOT format, id = track id).
using PredictionTable = std::map<int, std::vector<TrackPrediction>>;

inline PredictionTable read_predictions(const std::filesystem::path& path) {
  PredictionTable out;
  detail::for_each_mot_record(path, [&](const detail::MotRecord& r, std::size_t line_no) {
    if (r.id < 1) throw Error(detail::where(path, line_no) + "prediction needs a track id >= 1");
    out[r.frame].push_back({r.id, r.box});
  });
  return out;
}

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::string_view text, const std::string& origin = "<text>") {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[std::string(detail::trim(line.substr(0, eq)))] = std::string(detail::trim(line.substr(eq + 1)));
  }
  return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

namespace detail {

inline double kv_double(const std::string& key, const std::string& value) {
  double d = 0.0;
  if (!parse_double(value, d)) throw Error("config: " + key + " expects a number, got '" + value + "'");
  return d;
}

inline int kv_int(const std::string& key, const std::string& value) {
  int i = 0;
  if (!parse_int(value, i)) throw Error("config: " + key + " expects an integer, got '" + value + "'");
  return i;
}

}  // namespace detail

inline std::uint64_t parse_seed(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 19) {
    throw Error("config: seed expects a non-negative integer, got '" + v + "'");
  }
  return std::stoull(v);
}

// Overlays key=value settings on a simulator config. Unknown keys fail.
inline void apply(const KeyValues& kv, sim::SimConfig& c) {
  for (const auto& [k, v] : kv) {
    using detail::kv_double;
    using detail::kv_int;
    if (k == "seed") {
      c.seed = parse_seed(v);
    } else if (k == "num_identities") {
      c.num_identities = kv_int(k, v);
    } else if (k == "frames") {
      c.frames = kv_int(k, v);
    } else if (k == "arena_width") {
      c.arena_width = kv_double(k, v);
    } else if (k == "arena_height") {
      c.arena_height = kv_double(k, v);
    } else if (k == "speed_min") {
      c.speed_min = kv_double(k, v);
    } else if (k == "speed_max") {
      c.speed_max = kv_double(k, v);
    } else if (k == "box_min") {
      c.box_min = kv_double(k, v);
    } else if (k == "box_max") {
      c.box_max = kv_double(k, v);
    } else if (k == "center_noise") {
      c.center_noise = kv_double(k, v);
    } else if (k == "size_noise") {
      c.size_noise = kv_double(k, v);
    } else if (k == "miss_rate") {
      c.miss_rate = kv_double(k, v);
    } else if (k == "fp_rate") {
      c.fp_rate = kv_double(k, v);
    } else if (k == "occlusion_events") {
      c.occlusion_events = kv_int(k, v);
    } else if (k == "occlusion_min") {
      c.occlusion_min = kv_int(k, v);
    } else if (k == "occlusion_max") {
      c.occlusion_max = kv_int(k, v);
    } else if (k == "embedding_dim") {
      c.embedding_dim = kv_int(k, v);
    } else if (k == "embedding_noise") {
      c.embedding_noise = kv_double(k, v);
    } else if (k == "kick_prob") {
      c.kick_prob = kv_double(k, v);
    } else if (k == "frame_stride") {
      c.frame_stride = kv_int(k, v);
    } else {
      throw Error("config: unknown simulator key '" + k + "'");
    }
  }
}

// Overlays key=value settings on a tracker config. Unknown keys fail.
inline void apply(const KeyValues& kv, TrackerConfig& c) {
  double w1 = c.weights.w1();
  double w2 = c.weights.w2();
  for (const auto& [k, v] : kv) {
    if (k == "preset") {
      if (v == "default") {
        w1 = 0.5, w2 = 0.5;
      } else if (v == "mot16") {
        w1 = 0.2, w2 = 0.8;
      } else if (v == "iou") {
        w1 = 1.0, w2 = 0.0;
      } else {
        throw Error("config: unknown preset '" + v + "'");
      }
    }
  }
  for (const auto& [k, v] : kv) {
    using detail::kv_double;
    using detail::kv_int;
    if (k == "preset") {
      continue;
    } else if (k == "w1") {
      w1 = kv_double(k, v);
    } else if (k == "w2") {
      w2 = kv_double(k, v);
    } else if (k == "buffer_size") {
      c.buffer_size = kv_int(k, v);
    } else if (k == "min_affinity") {
      c.min_affinity = kv_double(k, v);
    } else if (k == "det_threshold") {
      c.det_threshold = kv_double(k, v);
    } else if (k == "motion_propagate_frames") {
      c.motion_propagate_frames = kv_int(k, v);
    } else if (k == "embedding_momentum") {
      c.embedding_momentum = kv_double(k, v);
    } else if (k == "frame_gap") {
      c.frame_gap = kv_int(k, v);
    } else if (k == "nms_threshold") {
      c.nms_threshold = kv_double(k, v);
    } else {
      throw Error("config: unknown tracker key '" + k + "'");
    }
  }
  c.weights = AffinityWeights(w1, w2);
  c.validate();
}

inline std::string format_key_values(const sim::SimConfig& c) {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "seed=%llu\nnum_identities=%d\nframes=%d\narena_width=%.6g\narena_height=%.6g\n"
                "speed_min=%.6g\nspeed_max=%.6g\nbox_min=%.6g\nbox_max=%.6g\ncenter_noise=%.6g\n"
                "size_noise=%.6g\nmiss_rate=%.6g\nfp_rate=%.6g\nocclusion_events=%d\n"
                "occlusion_min=%d\nocclusion_max=%d\nembedding_dim=%d\nembedding_noise=%.6g\n"
                "kick_prob=%.6g\nframe_stride=%d\n",
                static_cast<unsigned long long>(c.seed), c.num_identities, c.frames, c.arena_width,
                c.arena_height, c.speed_min, c.speed_max, c.box_min, c.box_max, c.center_noise,
                c.size_noise, c.miss_rate, c.fp_rate, c.occlusion_events, c.occlusion_min,
                c.occlusion_max, c.embedding_dim, c.embedding_noise, c.kick_prob, c.frame_stride);
  return buf;
}

}  // namespace idtrack::io

#endif  // IDTRACK_IO_HPP_

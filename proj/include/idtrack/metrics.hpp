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

#ifndef IDTRACK_METRICS_HPP_
#define IDTRACK_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "idtrack/affinity.hpp"
#include "idtrack/assignment.hpp"
#include "idtrack/core_types.hpp"

namespace idtrack {

// One labelled box: a ground-truth object or a tracker hypothesis.
struct TrackedObject {
  int id = 0;
  BBox box;
  double confidence = 1.0;
};

struct FrameObjects {
  int frame = 0;
  std::vector<TrackedObject> objects;
};

using TrackStream = std::vector<FrameObjects>;

// CLEAR-MOT counters plus the derived ratios. MOTP is mean IoU in [0,1].
struct MotReport {
  double mota = 0.0;
  double motp = 0.0;
  long ids = 0;
  long mt = 0;
  long ml = 0;
  long frag = 0;
  long fp = 0;
  long fn = 0;
  long gt_total = 0;
  long matches = 0;
  long gt_tracks = 0;
  double iou_sum = 0.0;

  // MOTA is undefined without ground truth and reported as NaN.
  void finalize() {
    mota = gt_total > 0 ? 1.0 - static_cast<double>(fn + fp + ids) / static_cast<double>(gt_total)
                        : std::numeric_limits<double>::quiet_NaN();
    motp = matches > 0 ? iou_sum / static_cast<double>(matches) : 0.0;
  }
};

// Sums counters of independent sequences and recomputes the ratios.
inline MotReport merge(const MotReport& a, const MotReport& b) {
  MotReport r;
  r.ids = a.ids + b.ids;
  r.mt = a.mt + b.mt;
  r.ml = a.ml + b.ml;
  r.frag = a.frag + b.frag;
  r.fp = a.fp + b.fp;
  r.fn = a.fn + b.fn;
  r.gt_total = a.gt_total + b.gt_total;
  r.matches = a.matches + b.matches;
  r.gt_tracks = a.gt_tracks + b.gt_tracks;
  r.iou_sum = a.iou_sum + b.iou_sum;
  r.finalize();
  return r;
}

inline constexpr double kMostlyTracked = 0.8;
inline constexpr double kMostlyLost = 0.2;

// CLEAR-MOT evaluation with IoU as the overlap criterion.
//
// Per frame: correspondences from the previous frame are kept while their
// IoU stays >= iou_gate; the rest are matched by maximum-IoU Hungarian
// assignment under the same gate. A matched object whose hypothesis id
// differs from its last known one is an identity switch, and the new
// correspondence replaces the old one.
inline MotReport evaluate(const TrackStream& gt, const TrackStream& hyp, double iou_gate = 0.5) {
  if (!(iou_gate > 0.0 && iou_gate <= 1.0)) throw Error("evaluate: iou_gate outside (0,1]");

  std::map<int, const FrameObjects*> gt_by_frame, hyp_by_frame;
  std::set<int> frames;
  for (const FrameObjects& f : gt) {
    if (!gt_by_frame.emplace(f.frame, &f).second) throw Error("evaluate: duplicate gt frame");
    frames.insert(f.frame);
  }
  for (const FrameObjects& f : hyp) {
    if (!hyp_by_frame.emplace(f.frame, &f).second) throw Error("evaluate: duplicate hyp frame");
    frames.insert(f.frame);
  }

  static const std::vector<TrackedObject> kNone;
  MotReport r;
  std::map<int, int> prev_match;  // gt id -> hyp id in the previous frame
  std::map<int, int> last_match;  // gt id -> most recent hyp id
  struct Coverage {
    long present = 0;
    long tracked = 0;
    long frag = 0;
    bool was_tracked = false;
    bool gap_after_track = false;
  };
  std::map<int, Coverage> coverage;

  for (int frame : frames) {
    const auto git = gt_by_frame.find(frame);
    const auto hit = hyp_by_frame.find(frame);
    const std::vector<TrackedObject>& g = git != gt_by_frame.end() ? git->second->objects : kNone;
    const std::vector<TrackedObject>& h = hit != hyp_by_frame.end() ? hit->second->objects : kNone;

    std::vector<int> g_to_h(g.size(), -1);
    std::vector<char> h_used(h.size(), 0);

    // Keep still-valid correspondences.
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto pm = prev_match.find(g[i].id);
      if (pm == prev_match.end()) continue;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (h_used[j] || h[j].id != pm->second) continue;
        if (iou(g[i].box, h[j].box) >= iou_gate) {
          g_to_h[i] = static_cast<int>(j);
          h_used[j] = 1;
        }
        break;
      }
    }

    // Hungarian on the remainder.
    std::vector<std::size_t> gi, hj;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g_to_h[i] < 0) gi.push_back(i);
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!h_used[j]) hj.push_back(j);
    }
    if (!gi.empty() && !hj.empty()) {
      AffinityMatrix m(gi.size(), hj.size());
      for (std::size_t a = 0; a < gi.size(); ++a) {
        for (std::size_t b = 0; b < hj.size(); ++b) {
          const double v = iou(g[gi[a]].box, h[hj[b]].box);
          m(a, b) = v >= iou_gate ? v : 0.0;
        }
      }
      const Assignment sol = solve_max(m, iou_gate);
      for (const auto& [a, b] : sol.pairs) {
        g_to_h[gi[a]] = static_cast<int>(hj[b]);
        h_used[hj[b]] = 1;
      }
    }

    std::map<int, int> cur_match;
    for (std::size_t i = 0; i < g.size(); ++i) {
      Coverage& c = coverage[g[i].id];
      ++c.present;
      ++r.gt_total;
      if (g_to_h[i] < 0) {
        ++r.fn;
        if (c.was_tracked) c.gap_after_track = true;
        continue;
      }
      const TrackedObject& hm = h[static_cast<std::size_t>(g_to_h[i])];
      ++r.matches;
      r.iou_sum += iou(g[i].box, hm.box);
      const auto lm = last_match.find(g[i].id);
      if (lm != last_match.end() && lm->second != hm.id) ++r.ids;
      last_match[g[i].id] = hm.id;
      cur_match[g[i].id] = hm.id;
      ++c.tracked;
      if (c.gap_after_track) ++c.frag;
      c.was_tracked = true;
      c.gap_after_track = false;
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!h_used[j]) ++r.fp;
    }
    prev_match = std::move(cur_match);
  }

  for (const auto& [id, c] : coverage) {
    ++r.gt_tracks;
    r.frag += c.frag;
    const double ratio = static_cast<double>(c.tracked) / static_cast<double>(c.present);
    if (ratio >= kMostlyTracked) {
      ++r.mt;
    } else if (ratio <= kMostlyLost) {
      ++r.ml;
    }
  }
  r.finalize();
  return r;
}

// Keeps hypotheses with confidence >= threshold.
inline TrackStream filter_by_confidence(const TrackStream& s, double threshold) {
  TrackStream out;
  out.reserve(s.size());
  for (const FrameObjects& f : s) {
    FrameObjects k{f.frame, {}};
    for (const TrackedObject& o : f.objects) {
      if (o.confidence >= threshold) k.objects.push_back(o);
    }
    out.push_back(std::move(k));
  }
  return out;
}

inline std::vector<double> default_thresholds() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

struct SweepRow {
  double threshold = 0.0;
  MotReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // Each metric at its own best threshold: max for MOTA/MOTP/MT, min for
  // IDS/ML/Frag/FP/FN. Not a single operating point.
  MotReport per_metric_best;
  // The row with the highest MOTA (ties: lowest threshold).
  SweepRow best_mota;
};

inline SweepResult summarize_sweep(std::vector<SweepRow> rows) {
  SweepResult s;
  s.rows = std::move(rows);
  if (s.rows.empty()) return s;
  MotReport best = s.rows.front().report;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const MotReport& m = s.rows[i].report;
    best.mota = std::max(best.mota, m.mota);
    best.motp = std::max(best.motp, m.motp);
    best.mt = std::max(best.mt, m.mt);
    best.ids = std::min(best.ids, m.ids);
    best.ml = std::min(best.ml, m.ml);
    best.frag = std::min(best.frag, m.frag);
    best.fp = std::min(best.fp, m.fp);
    best.fn = std::min(best.fn, m.fn);
    if (m.mota > s.rows[arg].report.mota) arg = i;
  }
  s.per_metric_best = best;
  s.best_mota = s.rows[arg];
  return s;
}

inline SweepResult sweep_thresholds(const TrackStream& gt, const TrackStream& hyp,
                                    const std::vector<double>& thresholds = default_thresholds(),
                                    double iou_gate = 0.5) {
  std::vector<SweepRow> rows;
  for (double t : thresholds) rows.push_back({t, evaluate(gt, filter_by_confidence(hyp, t), iou_gate)});
  return summarize_sweep(std::move(rows));
}

// Table columns: MOTA MOTP IDS MT ML Frag FP FN (percentages for MOTA/MOTP).
inline std::string format_table_header(const std::string& label_title = "Model",
                                       const std::string& extra_title = "") {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-34s %8s %8s %7s %6s %6s %7s %8s %8s", label_title.c_str(),
                "MOTA", "MOTP", "IDS", "MT", "ML", "Frag", "FP", "FN");
  std::string s = buf;
  if (!extra_title.empty()) s += " " + extra_title;
  return s + "\n";
}

inline std::string format_table_row(const std::string& label, const MotReport& m,
                                    const std::string& extra = "") {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-34s %8.2f %8.2f %7ld %6ld %6ld %7ld %8ld %8ld", label.c_str(),
                100.0 * m.mota, 100.0 * m.motp, m.ids, m.mt, m.ml, m.frag, m.fp, m.fn);
  std::string s = buf;
  if (!extra.empty()) s += " " + extra;
  return s + "\n";
}

// Line-oriented key=value report; `prefix` namespaces the keys.
inline std::string format_key_values(const MotReport& m, const std::string& prefix = "") {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%smota=%.6f\n%smotp=%.6f\n%sids=%ld\n%smt=%ld\n%sml=%ld\n%sfrag=%ld\n"
                "%sfp=%ld\n%sfn=%ld\n%sgt_total=%ld\n%smatches=%ld\n%sgt_tracks=%ld\n",
                prefix.c_str(), 100.0 * m.mota, prefix.c_str(), 100.0 * m.motp, prefix.c_str(),
                m.ids, prefix.c_str(), m.mt, prefix.c_str(), m.ml, prefix.c_str(), m.frag,
                prefix.c_str(), m.fp, prefix.c_str(), m.fn, prefix.c_str(), m.gt_total,
                prefix.c_str(), m.matches, prefix.c_str(), m.gt_tracks);
  return buf;
}

}  // namespace idtrack

#endif  // IDTRACK_METRICS_HPP_

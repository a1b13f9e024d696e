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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "idtrack/assignment.hpp"
#include "idtrack/metrics.hpp"
#include "idtrack/nn_kernels.hpp"
#include "idtrack/pipeline.hpp"
#include "idtrack/sim.hpp"
#include "oracles.hpp"

namespace {

using namespace idtrack;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Embedding random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  Embedding v(dim);
  for (double& x : v) x = g(rng);
  return normalized(v);
}

Outcome hungarian_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dim(1, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0, done = 0;
  while (done < 1000) {
    const int r = dim(rng), c = dim(rng);
    if (std::min(r, c) > 7) continue;
    AffinityMatrix m(r, c);
    std::vector<std::vector<double>> ref(r, std::vector<double>(c));
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) ref[i][j] = m(i, j) = u(rng);
    }
    double best = 0.0;
    for (const auto& [i, j] : oracle::brute_force_pairs(ref, 0.0)) best += ref[i][j];
    if (solve_max(m, 0.0).total(m) != best) ++mismatches;
    ++done;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          fmt("%.0f/1000 exact optimum, %.2f s", 1000 - mismatches, secs)};
}

Outcome correlation_oracle() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> hw(1, 8), dd(1, 16);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int h = hw(rng), w = hw(rng), d = dd(rng);
    nn::FeatureMap a(h, w, d), b(h, w, d);
    for (double& v : a.values()) v = u(rng);
    for (double& v : b.values()) v = u(rng);
    const nn::CorrelationMap c = nn::correlate(a, b, 2);
    const std::vector<double> ref = oracle::naive_correlation(a, b, 2);
    if (c.values().size() != ref.size()) return {false, "shape mismatch"};
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(c.values()[i] - ref[i]));
  }
  return {worst < 1e-6, fmt("max abs deviation %.3g over 100 maps", worst)};
}

Outcome oim_gradient() {
  std::mt19937_64 rng(1003);
  const int dim = 256, ids = 100;
  const double h = 1e-5;
  double worst_rel = 0.0, worst_norm = 0.0;
  for (int t = 0; t < 50; ++t) {
    nn::OimTable table(dim, ids);
    for (int i = 0; i < ids; ++i) table.set_column(i, random_unit(rng, dim));
    const Embedding x = random_unit(rng, dim);
    const int id = static_cast<int>(rng() % ids);
    const std::vector<double> g = nn::oim_grad(x, table, id);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < dim; ++k) {
      Embedding xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = static_cast<double>(
          (oracle::oim_loss_any(xp, table, id) - oracle::oim_loss_any(xm, table, id)) / (2.0L * h));
      num += (g[k] - fd) * (g[k] - fd);
      den += fd * fd;
    }
    worst_rel = std::max(worst_rel, std::sqrt(num / den));
    const nn::OimTable next = nn::oim_update(table, x, id);
    for (int i = 0; i < ids; ++i) worst_norm = std::max(worst_norm, std::abs(l2_norm(next.column(i)) - 1.0));
  }
  return {worst_rel < 1e-4 && worst_norm < 1e-9,
          fmt("max relative error %.3g, max column norm drift %.3g", worst_rel, worst_norm)};
}

Outcome regression_targets() {
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<double> pos(-500, 500), size(1, 300);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BBox a(pos(rng), pos(rng), size(rng), size(rng));
    const BBox b(pos(rng), pos(rng), size(rng), size(rng));
    const BBox r = nn::decode_targets(a, nn::encode_targets(a, b));
    worst = std::max({worst, std::abs(r.cx() - b.cx()), std::abs(r.cy() - b.cy()), std::abs(r.w() - b.w()),
                      std::abs(r.h() - b.h())});
  }
  const BBox b(10, 20, 8, 6);
  const nn::MotionTargets same = nn::encode_targets(b, b);
  const nn::MotionTargets wide = nn::encode_targets(b, BBox(10, 20, 16, 6));
  const nn::MotionTargets shift = nn::encode_targets(b, BBox(13, 18, 8, 6));
  auto near = [](double a, double e) { return std::abs(a - e) <= 1e-12; };
  const bool examples = near(same.dx, 0) && near(same.dy, 0) && near(same.dw, 0) && near(same.dh, 0) &&
                        near(wide.dx, 0) && near(wide.dy, 0) && near(wide.dw, 0.6931471805599453) &&
                        near(wide.dh, 0) && near(shift.dx, 3) && near(shift.dy, -2) && near(shift.dw, 0) &&
                        near(shift.dh, 0);
  return {worst < 1e-9 && examples,
          fmt("round-trip max error %.3g, examples ", worst) + (examples ? "ok" : "MISMATCH")};
}

TrackStream scripted(std::initializer_list<std::initializer_list<std::pair<int, double>>> frames) {
  TrackStream s;
  int f = 1;
  for (const auto& objs : frames) {
    FrameObjects fo{f++, {}};
    for (const auto& [id, x] : objs) fo.objects.push_back({id, BBox(x, 50, 20, 20), 1.0});
    s.push_back(fo);
  }
  return s;
}

struct Expected {
  long ids, mt, ml, frag, fp, fn, gt_total;
};

bool counts_match(const MotReport& r, const Expected& e) {
  return r.ids == e.ids && r.mt == e.mt && r.ml == e.ml && r.frag == e.frag && r.fp == e.fp &&
         r.fn == e.fn && r.gt_total == e.gt_total;
}

Outcome metric_golden_cases() {
  struct Case {
    const char* name;
    TrackStream gt, hyp;
    Expected want;
  };
  const TrackStream still5 = scripted({{{1, 0}}, {{1, 0}}, {{1, 0}}, {{1, 0}}, {{1, 0}}});
  const TrackStream two = scripted({{{1, 0}, {2, 100}}, {{1, 5}, {2, 95}}, {{1, 10}, {2, 90}}});
  const TrackStream pair5 = scripted({{{1, 0}, {2, 100}}, {{1, 0}, {2, 100}}, {{1, 0}, {2, 100}},
                                      {{1, 0}, {2, 100}}, {{1, 0}, {2, 100}}});
  const std::vector<Case> cases = {
      {"perfect", two, two, {0, 2, 0, 0, 0, 0, 6}},
      {"empty", pair5, {}, {0, 0, 2, 0, 0, 10, 10}},
      {"one-id-swap", scripted({{{1, 0}}, {{1, 0}}, {{1, 0}}, {{1, 0}}}),
       scripted({{{7, 0}}, {{7, 0}}, {{8, 0}}, {{8, 0}}}), {1, 1, 0, 0, 0, 0, 4}},
      {"one-fragmentation", still5, scripted({{{3, 0}}, {{3, 0}}, {}, {{3, 0}}, {{3, 0}}}),
       {0, 1, 0, 1, 0, 1, 5}},
      {"mixed-fp-fn", scripted({{{1, 0}, {2, 100}}, {{1, 0}, {2, 100}}, {{1, 0}}}),
       scripted({{{1, 0}, {9, 300}}, {{2, 100}}, {{1, 2}}}), {0, 0, 0, 1, 1, 2, 5}},
  };
  std::string failed;
  for (const Case& c : cases) {
    const MotReport r = evaluate(c.gt, c.hyp);
    const double identity = 1.0 - static_cast<double>(r.fn + r.fp + r.ids) / r.gt_total;
    if (!counts_match(r, c.want) || r.mota != identity) failed += std::string(" ") + c.name;
  }
  return {failed.empty(), failed.empty() ? "5/5 cases match hand counts" : "mismatch:" + failed};
}

sim::SimConfig benchmark() {
  sim::SimConfig c;  // 30 identities, 500 frames, 20 occlusion events
  c.seed = 2024;
  return c;
}

struct PairResult {
  MotReport iou_only, identity;
  double seconds = 0.0;
};

PairResult compare_models(int stride) {
  const auto t0 = Clock::now();
  sim::SimConfig cfg = benchmark();
  cfg.frame_stride = stride;
  const sim::SimOutput data = sim::generate(cfg);
  const std::vector<AblationModel> models = default_ablation_models();
  PairResult r;
  r.iou_only = sweep_model(data, models[0], default_thresholds()).best_mota.report;
  r.identity = sweep_model(data, models[2], default_thresholds()).best_mota.report;
  r.seconds = seconds_since(t0);
  return r;
}

Outcome low_frame_rate() {
  const PairResult r = compare_models(10);
  const double gain = 100.0 * (r.identity.mota - r.iou_only.mota);
  const bool pass = r.identity.ids <= 0.2 * r.iou_only.ids && gain >= 5.0 && r.seconds < 60.0;
  return {pass, fmt("IDS %.0f vs %.0f (IoU only), MOTA %+.2f points, %.1f s", r.identity.ids, r.iou_only.ids,
                    gain, r.seconds)};
}

Outcome high_frame_rate() {
  const PairResult r = compare_models(1);
  const double diff = 100.0 * (r.identity.mota - r.iou_only.mota);
  return {std::abs(diff) <= 2.0,
          fmt("MOTA %.2f vs %.2f (IoU only), difference %+.2f points", 100.0 * r.identity.mota,
              100.0 * r.iou_only.mota, diff)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool run_pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "in.cfg") << "seed=99\nframes=200\nnum_identities=15\n";
  const std::string cli = IDTRACK_CLI_PATH;
  const std::string d = dir.string();
  const std::string cmds[] = {
      cli + " simulate --config " + d + "/in.cfg --out-dir " + d,
      cli + " track --dets " + d + "/det.txt --embeddings " + d + "/embeddings.txt --out " + d + "/hyp.txt",
      cli + " eval --gt " + d + "/gt.txt --hyp " + d + "/hyp.txt --report " + d + "/report.txt > " + d +
          "/eval.txt",
  };
  for (const std::string& c : cmds) {
    if (std::system(c.c_str()) != 0) return false;
  }
  return true;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "idtrack_acceptance";
  const fs::path a = base / "a", b = base / "b";
  if (!run_pipeline(a) || !run_pipeline(b)) return {false, "pipeline command failed"};
  std::string diff;
  for (const char* f : {"gt.txt", "det.txt", "embeddings.txt", "sim.cfg", "hyp.txt", "report.txt", "eval.txt"}) {
    const std::string x = slurp(a / f);
    if (x.empty() || x != slurp(b / f)) diff += std::string(" ") + f;
  }
  fs::remove_all(base);
  return {diff.empty(), diff.empty() ? "7 output files byte-identical" : "differs or empty:" + diff};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"hungarian-vs-brute-force", hungarian_oracle},
      {"correlation-vs-naive", correlation_oracle},
      {"oim-gradient-and-update", oim_gradient},
      {"motion-target-round-trip", regression_targets},
      {"metric-golden-cases", metric_golden_cases},
      {"low-frame-rate-ablation", low_frame_rate},
      {"high-frame-rate-parity", high_frame_rate},
      {"end-to-end-determinism", determinism},
  };
  int failures = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", ++n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failures, n);
  return failures == 0 ? 0 : 1;
}

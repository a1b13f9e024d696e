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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "idtrack/io.hpp"
#include "idtrack/pipeline.hpp"
#include "idtrack/sim.hpp"

namespace idtrack::io {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("idtrack_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(IoTest, ParsesOneDetectionLine) {
  const auto s = read_detections(write("d.txt", "1,-1,10,20,30,40,0.9,-1,-1,-1\n"));
  ASSERT_EQ(s.size(), 1u);
  ASSERT_EQ(s[0].detections.size(), 1u);
  const Detection& d = s[0].detections[0];
  EXPECT_EQ(s[0].frame, 1);
  EXPECT_EQ(d.frame, 1);
  EXPECT_DOUBLE_EQ(d.box.cx(), 25.0);
  EXPECT_DOUBLE_EQ(d.box.cy(), 40.0);
  EXPECT_DOUBLE_EQ(d.box.w(), 30.0);
  EXPECT_DOUBLE_EQ(d.box.h(), 40.0);
  EXPECT_DOUBLE_EQ(d.confidence, 0.9);
  EXPECT_FALSE(d.has_embedding());
}

TEST_F(IoTest, EmptyFileGivesEmptyStream) {
  EXPECT_TRUE(read_detections(write("d.txt", "")).empty());
  EXPECT_TRUE(read_tracks(write("t.txt", "")).empty());
}

TEST_F(IoTest, GroupsByFrameInFileOrder) {
  const auto s = read_detections(write("d.txt",
                                       "2,-1,0,0,10,10,0.5\n"
                                       "1,-1,5,5,10,10,0.7\n"
                                       "2,-1,50,0,10,10,0.6\n"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].frame, 1);
  EXPECT_EQ(s[1].frame, 2);
  ASSERT_EQ(s[1].detections.size(), 2u);
  EXPECT_DOUBLE_EQ(s[1].detections[0].confidence, 0.5);
  EXPECT_DOUBLE_EQ(s[1].detections[1].confidence, 0.6);
}

TEST_F(IoTest, MalformedLineNamesTheLine) {
  const fs::path p = write("d.txt", "1,-1,0,0,10,10,0.5\n1,-1,abc,0,10,10,0.5\n");
  try {
    read_detections(p);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST_F(IoTest, RejectsBadRecords) {
  EXPECT_THROW(read_detections(write("a.txt", "1,-1,0,0,0,10,0.5\n")), Error);
  EXPECT_THROW(read_detections(write("b.txt", "1,-1,0,0,10,-3,0.5\n")), Error);
  EXPECT_THROW(read_detections(write("c.txt", "1,-1,0,0,10\n")), Error);
  EXPECT_THROW(read_detections(write("d.txt", "0,-1,0,0,10,10,0.5\n")), Error);
  EXPECT_THROW(read_detections(write("e.txt", "1,-1,0,0,10,10,1.5\n")), Error);
  EXPECT_THROW(read_detections(dir_ / "missing.txt"), Error);
}

TEST_F(IoTest, TracksRoundTrip) {
  TrackStream t = {{1, {{1, BBox(10.25, 20.5, 30, 40), 0.9}, {2, BBox(100, 100, 12.125, 7), 0.5}}},
                   {3, {{1, BBox(11.3333333, 21, 30, 40), 1.0}}}};
  const fs::path p = dir_ / "t.txt";
  write_tracks(p, t);
  const TrackStream back = read_tracks(p);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t f = 0; f < t.size(); ++f) {
    EXPECT_EQ(back[f].frame, t[f].frame);
    ASSERT_EQ(back[f].objects.size(), t[f].objects.size());
    for (std::size_t j = 0; j < t[f].objects.size(); ++j) {
      const TrackedObject& a = t[f].objects[j];
      const TrackedObject& b = back[f].objects[j];
      EXPECT_EQ(a.id, b.id);
      EXPECT_NEAR(a.box.cx(), b.box.cx(), 1e-6);
      EXPECT_NEAR(a.box.cy(), b.box.cy(), 1e-6);
      EXPECT_NEAR(a.box.w(), b.box.w(), 1e-6);
      EXPECT_NEAR(a.box.h(), b.box.h(), 1e-6);
      EXPECT_NEAR(a.confidence, b.confidence, 1e-6);
    }
  }
}

TEST_F(IoTest, ResultsOneLinePerTrackPerFrameSorted) {
  std::vector<TrackOutput> out = {
      {2, 5, BBox(50, 50, 10, 10), 0.8, false},
      {1, 3, BBox(10, 10, 10, 10), 0.9, false},
      {1, 1, BBox(30, 30, 10, 10), 0.7, false},
      {2, 1, BBox(31, 30, 10, 10), 0.7, true},
  };
  const fs::path p = dir_ / "r.txt";
  write_results(p, out);
  EXPECT_EQ(slurp(p),
            "1,1,25.000000,25.000000,10.000000,10.000000,0.700000,-1,-1,-1\n"
            "1,3,5.000000,5.000000,10.000000,10.000000,0.900000,-1,-1,-1\n"
            "2,5,45.000000,45.000000,10.000000,10.000000,0.800000,-1,-1,-1\n");
  write_results(p, out, true);
  EXPECT_EQ(read_tracks(p)[1].objects.size(), 2u);
  out.push_back({3, 0, BBox(1, 1, 1, 1), 1.0, false});
  EXPECT_THROW(write_results(p, out), Error);
}

TEST_F(IoTest, TrackingOutputIsByteIdentical) {
  sim::SimConfig c;
  c.frames = 120;
  const sim::SimOutput data = sim::generate(c);
  const fs::path a = dir_ / "a.txt", b = dir_ / "b.txt";
  write_results(a, run_tracking(data.dets, TrackerConfig{}));
  write_results(b, run_tracking(data.dets, TrackerConfig{}));
  const std::string sa = slurp(a);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, slurp(b));
}

TEST_F(IoTest, EmbeddingsRoundTripThroughSidecar) {
  sim::SimConfig c;
  c.frames = 20;
  c.embedding_dim = 16;
  const sim::SimOutput data = sim::generate(c);
  write_detections(dir_ / "det.txt", data.dets);
  write_embeddings(dir_ / "emb.txt", data.dets);
  DetectionStream s = read_detections(dir_ / "det.txt");
  std::vector<std::string> warnings;
  const EmbeddingTable table =
      read_embeddings(dir_ / "emb.txt", [&](const std::string& w) { warnings.push_back(w); });
  std::size_t total = 0;
  for (const auto& f : s) total += f.detections.size();
  EXPECT_EQ(attach_embeddings(s, table), total);
  EXPECT_TRUE(warnings.empty());
  for (std::size_t f = 0; f < s.size(); ++f) {
    for (std::size_t i = 0; i < s[f].detections.size(); ++i) {
      const Embedding& x = s[f].detections[i].embedding;
      const Embedding& y = data.dets[f].detections[i].embedding;
      ASSERT_EQ(x.size(), y.size());
      for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x[k], y[k], 1e-8);
    }
  }
}

TEST_F(IoTest, EmbeddingsNormalizedWithWarning) {
  std::vector<std::string> warnings;
  const EmbeddingTable t = read_embeddings(write("e.txt", "dim=2\n1,0,3,4\n1,1,0.6,0.8\n"),
                                           [&](const std::string& w) { warnings.push_back(w); });
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NEAR(t.at({1, 0})[0], 0.6, 1e-15);
  EXPECT_NEAR(t.at({1, 0})[1], 0.8, 1e-15);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST_F(IoTest, EmbeddingsRejectBadInput) {
  EXPECT_THROW(read_embeddings(write("a.txt", "1,0,0.6,0.8\n")), Error);
  EXPECT_THROW(read_embeddings(write("b.txt", "dim=2\n1,0,0.6\n")), Error);
  EXPECT_THROW(read_embeddings(write("c.txt", "dim=2\n1,0,0,0\n")), Error);
  EXPECT_THROW(read_embeddings(write("d.txt", "dim=2\n1,0,1,0\n1,0,0,1\n")), Error);
}

TEST_F(IoTest, PredictionsKeyedByFrameAndTrack) {
  const PredictionTable p = read_predictions(write("p.txt", "2,4,0,0,10,10\n2,7,20,0,10,10\n"));
  ASSERT_EQ(p.at(2).size(), 2u);
  EXPECT_EQ(p.at(2)[1].track_id, 7);
  EXPECT_DOUBLE_EQ(p.at(2)[1].box.cx(), 25.0);
  EXPECT_THROW(read_predictions(write("q.txt", "2,-1,0,0,10,10\n")), Error);
}

TEST(KeyValuesTest, ParsesCommentsAndWhitespace) {
  const KeyValues kv = parse_key_values("# header\n w1 = 0.3 \n\nw2=0.7 # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("w1"), "0.3");
  EXPECT_EQ(kv.at("w2"), "0.7");
  EXPECT_THROW(parse_key_values("novalue\n"), Error);
}

TEST(KeyValuesTest, TrackerPresetsAndOverrides) {
  TrackerConfig c;
  io::apply(parse_key_values("preset=mot16\n"), c);
  EXPECT_DOUBLE_EQ(c.weights.w1(), 0.2);
  EXPECT_DOUBLE_EQ(c.weights.w2(), 0.8);
  io::apply(parse_key_values("preset=iou\nbuffer_size=3\n"), c);
  EXPECT_DOUBLE_EQ(c.weights.w2(), 0.0);
  EXPECT_EQ(c.buffer_size, 3);
  io::apply(parse_key_values("w1=0.6\nw2=0.4\n"), c);
  EXPECT_DOUBLE_EQ(c.weights.w1(), 0.6);
  TrackerConfig d;
  EXPECT_THROW(io::apply(parse_key_values("bogus=1\n"), d), Error);
  EXPECT_THROW(io::apply(parse_key_values("preset=fast\n"), d), Error);
  EXPECT_THROW(io::apply(parse_key_values("w1=0.6\nw2=0.6\n"), d), Error);
  EXPECT_THROW(io::apply(parse_key_values("buffer_size=two\n"), d), Error);
}

TEST(KeyValuesTest, SimConfigRoundTrip) {
  sim::SimConfig c;
  c.seed = 123456789012345ULL;
  c.frames = 77;
  c.embedding_noise = 0.35;
  c.frame_stride = 4;
  sim::SimConfig back;
  io::apply(parse_key_values(format_key_values(c)), back);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.frames, 77);
  EXPECT_DOUBLE_EQ(back.embedding_noise, 0.35);
  EXPECT_EQ(back.frame_stride, 4);
  EXPECT_THROW(io::apply(parse_key_values("seed=-1\n"), back), Error);
  EXPECT_THROW(io::apply(parse_key_values("speed=3\n"), back), Error);
}

}  // namespace
}  // namespace idtrack::io

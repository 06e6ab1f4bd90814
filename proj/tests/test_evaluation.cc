// Copyright 2026 The gridicl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "gridicl/errors.h"
#include "gridicl/evaluation.h"
#include "gridicl/grid.h"
#include "gridicl/tensor_file.h"
#include "test_util.h"

namespace gridicl {
namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidInput;
}

// Embedder that reads the first two pixels' red values as a 2-vector.
std::vector<double> two_pixel_embed(const Image& im) { return {im.at(0, 0, 0), im.at(1, 0, 0)}; }

Image two_pixel(float p, float q) {
  Image im(2, 1, 3);
  im.at(0, 0, 0) = p;
  im.at(1, 0, 0) = q;
  return im;
}

TEST(DirectionSimilarity, ParallelAntiparallelAndUndefined) {
  const Image a = two_pixel(0.1f, 0.1f);
  const Image ap = two_pixel(0.5f, 0.3f);
  const Image b = two_pixel(0.2f, 0.6f);
  EXPECT_NEAR(direction_similarity(a, ap, b, two_pixel(0.6f, 0.8f), two_pixel_embed), 1.0, 1e-6);
  EXPECT_NEAR(direction_similarity(a, ap, b, two_pixel(0.0f, 0.5f), two_pixel_embed), -1.0, 1e-6);
  // Orthogonal change: (0.4, 0.2) vs (-0.1, 0.2).
  EXPECT_NEAR(direction_similarity(a, ap, b, two_pixel(0.1f, 0.8f), two_pixel_embed), 0.0, 1e-6);
  EXPECT_EQ(kind_of([&] { direction_similarity(a, ap, b, b, two_pixel_embed); }),
            ErrorKind::kUndefinedDirection);
  EXPECT_EQ(kind_of([&] { direction_similarity(a, a, b, ap, two_pixel_embed); }),
            ErrorKind::kUndefinedDirection);
}

TEST(DirectionCosine, ScaleInvariantAndSymmetric) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(kToyEmbeddingDim), v(kToyEmbeddingDim);
    for (double& x : u) x = rng.normal();
    for (double& x : v) x = rng.normal();
    const double c = direction_cosine(u, v);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(direction_cosine(v, u), c, 1e-12);
    const double k = 0.01 + 100.0 * rng.uniform();
    std::vector<double> scaled = u;
    for (double& x : scaled) x *= k;
    EXPECT_NEAR(direction_cosine(scaled, v), c, 1e-9);
  }
  EXPECT_EQ(kind_of([] { direction_cosine({1.0, 2.0}, {1.0, 2.0, 3.0}); }), ErrorKind::kShape);
}

TEST(ToyEmbedder, LayoutAndHistogram) {
  const Image flat(16, 16, 3, 0.3f);
  const std::vector<double> e = toy_embedder(flat);
  ASSERT_EQ(e.size(), static_cast<size_t>(kToyEmbeddingDim));
  for (int i = 0; i < 48; ++i) EXPECT_NEAR(e[i], 0.3, 1e-6);
  // 0.3 * 8 = 2.4 falls in bin 2 of each channel.
  for (int c = 0; c < 3; ++c) {
    for (int b = 0; b < 8; ++b) EXPECT_NEAR(e[48 + c * 8 + b], b == 2 ? 1.0 : 0.0, 1e-12);
  }
  Image img = testing::random_image(20, 12, 8);
  const std::vector<double> r = toy_embedder(img);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int b = 0; b < 8; ++b) s += r[48 + c * 8 + b];
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  // Top-left pooling cell of a 20x12 image covers x < 5, y < 3.
  double red = 0.0;
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) red += img.at(x, y, 0);
  }
  EXPECT_NEAR(r[0], red / 15.0, 1e-6);
  EXPECT_EQ(toy_embedder(img), r);
  EXPECT_THROW(toy_embedder(Image()), Error);
}

// Oracle ceiling of the toy embedder, measured on 20 samples per task at cell
// 64 (mean / stddev): colorize 0.058 / 0.228, deblur 0.018 / 0.216, denoise
// 0.049 / 0.233, brighten 0.695 / 0.130. A and B are independent scenes, so
// only the brightness change points the same way in pooled-colour space.
TEST(BatchEval, OraclePipelineCeiling) {
  const auto ds = make_balanced_dataset(20, 0x5eed0e7a1ULL, {64, 64});
  const DirectionReport report = batch_eval(
      ds, [](const TaskSample& s) { return s.b_prime_gt; }, toy_embedder, "digest");
  ASSERT_EQ(report.tasks.size(), 4u);
  for (const TaskSummary& t : report.tasks) {
    EXPECT_EQ(t.count, 20);
    EXPECT_EQ(t.defined, 20);
    EXPECT_EQ(t.failures, 0);
    EXPECT_EQ(t.mean_pixel_mae, 0.0);
    EXPECT_GT(t.mean_similarity, 0.0) << task_name(t.task);
  }
  EXPECT_GT(report.find(TaskTag::kBrighten)->mean_similarity, 0.6);
  EXPECT_NEAR(report.find(TaskTag::kColorize)->mean_similarity, 0.058, 0.001);
  EXPECT_EQ(report.failures, 0);
  EXPECT_EQ(report.summary_json()["config_digest"], "digest");
}

TEST(BatchEval, IdentityIsUndefinedAndErrorsAreRecorded) {
  const auto ds = make_balanced_dataset(2, 1, {32, 32});
  const DirectionReport identity =
      batch_eval(ds, [](const TaskSample& s) { return s.b; }, toy_embedder, "");
  EXPECT_EQ(identity.undefined, 8);
  for (const SampleOutcome& o : identity.samples) {
    EXPECT_EQ(o.status, "undefined");
    EXPECT_FALSE(o.similarity.has_value());
    EXPECT_TRUE(o.pixel_mae.has_value());
  }
  int calls = 0;
  const DirectionReport broken = batch_eval(
      ds,
      [&calls](const TaskSample& s) -> Image {
        if (calls++ % 2 == 0) throw Error(ErrorKind::kNumeric, "boom, twice");
        return s.b_prime_gt;
      },
      toy_embedder, "");
  EXPECT_EQ(broken.failures, 4);
  EXPECT_EQ(broken.samples.size(), 8u);
  for (const TaskSummary& t : broken.tasks) {
    EXPECT_EQ(t.failures, 1);
    EXPECT_EQ(t.defined, 1);
  }
}

TEST(BatchEval, CsvHasOneRowPerSample) {
  const auto ds = make_balanced_dataset(3, 2, {32, 32});
  const DirectionReport report = batch_eval(
      ds, [](const TaskSample& s) -> Image {
        if (s.task == TaskTag::kDeblur) throw Error(ErrorKind::kNumeric, "a, b\nc");
        return s.b_prime_gt;
      },
      toy_embedder, "");
  const auto path = testing::scratch_dir("csv") / "report.csv";
  write_report_csv(report, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "sample_id,task,similarity,pixel_mae,status");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
  }
  EXPECT_EQ(rows, 12);
}

AttentionScores uniform_scores(int heads, Size res) {
  AttentionScores s = AttentionScores::self(heads, res);
  std::fill(s.values.begin(), s.values.end(), 1.0f / s.positions());
  return s;
}

TEST(Heatmap, UniformRowGivesZeros) {
  const AttentionScores s = uniform_scores(2, {8, 8});
  for (Quadrant q : {Quadrant::kTopLeft, Quadrant::kTopRight, Quadrant::kBottomLeft,
                     Quadrant::kBottomRight}) {
    const auto v = heatmap_values(s, 0, q);
    ASSERT_EQ(v.size(), 16u);
    for (double x : v) EXPECT_EQ(x, 0.0);
  }
  const Image img = attention_heatmap(s, 0, Quadrant::kTopRight, {32, 32});
  EXPECT_EQ(img.width(), 32);
  EXPECT_EQ(img.height(), 32);
  const Color zero = colormap(0.0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(31, 31, c), zero[c]);
}

TEST(Heatmap, OneHotPeaksAtTheTarget) {
  AttentionScores s = AttentionScores::self(2, {8, 8});
  const RegionIndexMap idx = region_indices(8, 8);
  const int anchor = idx.quadrant(Quadrant::kTopLeft)[5];
  const int target = idx.quadrant(Quadrant::kBottomRight)[9];
  s.at(1, anchor, target) = 1.0f;
  const auto v = heatmap_values(s, anchor, Quadrant::kBottomRight);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(v[i], i == 9 ? 1.0 : 0.0);
  // 9 is (row 2, col 1) of the 4x4 quadrant; upsampled by 8.
  const Image img = attention_heatmap(s, anchor, Quadrant::kBottomRight, {32, 32});
  const Color hot = colormap(1.0);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(img.at(8, 16, c), hot[c]);
    EXPECT_EQ(img.at(15, 23, c), hot[c]);
  }
  EXPECT_NE(img.at(16, 16, 0), hot[0]);
  EXPECT_NE(img.at(7, 16, 0), hot[0]);
  EXPECT_EQ(kind_of([&] { heatmap_values(s, 64, Quadrant::kTopLeft); }), ErrorKind::kIndex);
  EXPECT_EQ(kind_of([&] { heatmap_values(AttentionScores::cross(1, {8, 8}, 4), 0,
                                         Quadrant::kTopLeft); }),
            ErrorKind::kInvalidInput);
}

TEST(Colormap, EndpointsAndMonotoneRedAtTop) {
  const Color lo = colormap(0.0);
  const Color hi = colormap(1.0);
  EXPECT_LT(lo[0], 0.1f);
  EXPECT_GT(lo[2], 0.4f);
  EXPECT_GT(hi[0], 0.8f);
  EXPECT_LT(hi[2], 0.1f);
  EXPECT_EQ(colormap(-3.0), lo);
  EXPECT_EQ(colormap(7.0), hi);
}

TEST(AttentionDump, RoundTripAndMissing) {
  AttentionScores s = uniform_scores(3, {4, 4});
  s.at(2, 1, 7) = 0.5f;
  const auto path = testing::scratch_dir("dump") / "attn.bin";
  const std::vector<uint32_t> dims = {3, 16, 16};
  write_tensor(path, dims, s.values);
  const AttentionScores back = load_attention_dump(path, AttentionKind::kSelf, {4, 4});
  EXPECT_EQ(back.heads, 3);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(kind_of([&] { load_attention_dump(path, AttentionKind::kSelf, {8, 8}); }),
            ErrorKind::kShape);
  EXPECT_EQ(kind_of([&] { load_attention_dump(path.parent_path() / "nope.bin",
                                              AttentionKind::kSelf, {4, 4}); }),
            ErrorKind::kNotFound);
}

TEST(AnchorToRow, MapsLatentCoordinates) {
  // Latent 16x16 (quadrant 8x8) onto an 8x8 map (quadrant 4x4).
  EXPECT_EQ(anchor_to_row(0, 0, {16, 16}, {8, 8}), 0);
  EXPECT_EQ(anchor_to_row(7, 7, {16, 16}, {8, 8}), 3 * 8 + 3);
  EXPECT_EQ(anchor_to_row(2, 5, {16, 16}, {16, 16}), 2 * 16 + 5);
  EXPECT_EQ(anchor_to_row(0, 0, {16, 16}, {8, 8}, Quadrant::kTopRight), 4);
  EXPECT_EQ(anchor_to_row(0, 0, {16, 16}, {8, 8}, Quadrant::kBottomLeft), 32);
  EXPECT_EQ(kind_of([] { anchor_to_row(8, 0, {16, 16}, {8, 8}); }), ErrorKind::kIndex);
}

}  // namespace
}  // namespace gridicl

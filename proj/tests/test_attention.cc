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
#include <cstring>

#include "gridicl/attention.h"
#include "gridicl/errors.h"
#include "gridicl/network.h"
#include "gridicl/random.h"

namespace gridicl {
namespace {

AttentionScores random_self(int heads, int side, Rng& rng) {
  AttentionScores s = AttentionScores::self(heads, {side, side});
  for (float& v : s.values) v = static_cast<float>(rng.normal() * 3.0);
  return s;
}

AttentionScores random_cross(int heads, int side, int len, Rng& rng) {
  AttentionScores s = AttentionScores::cross(heads, {side, side}, len);
  for (float& v : s.values) v = static_cast<float>(rng.normal());
  for (int h = 0; h < heads; ++h) softmax_rows(&s.at(h, 0, 0), s.positions(), len);
  return s;
}

bool in(const std::vector<int>& set, int i) {
  return std::find(set.begin(), set.end(), i) != set.end();
}

TEST(SelfAttentionCloning, HandEnumerableTwoByTwo) {
  AttentionScores s = AttentionScores::self(1, {2, 2});
  for (int i = 0; i < 16; ++i) s.values[i] = static_cast<float>(i + 1);
  const AttentionScores out = clone_self_attention(s, region_indices(2, 2), 1.0, false);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (r == 1 && c == 3) {
        EXPECT_EQ(out.at(0, r, c), s.at(0, 0, 2));
      } else {
        EXPECT_EQ(out.at(0, r, c), s.at(0, r, c)) << r << "," << c;
      }
    }
  }
}

TEST(SelfAttentionCloning, ConstantMatrix) {
  AttentionScores s = AttentionScores::self(2, {4, 4});
  std::fill(s.values.begin(), s.values.end(), 1.0f);
  const RegionIndexMap idx = region_indices(4, 4);
  const AttentionScores out = clone_self_attention(s, idx, kDefaultCloneScale, false);
  const auto& ap = idx.role(Role::kAPrime);
  const auto& bp = idx.role(Role::kBPrime);
  for (int h = 0; h < 2; ++h) {
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const float expect = (in(ap, r) && in(bp, c)) ? 1.3f : 1.0f;
        EXPECT_EQ(out.at(h, r, c), expect);
      }
    }
  }
  EXPECT_EQ(kSkeletonCloneScale, 1.4);
}

// Criterion-level property: block equals s x source block, rest bit-identical,
// softmax rows still sum to one.
TEST(SelfAttentionCloning, RandomMatricesBruteForce) {
  Rng rng(11);
  const int sides[] = {2, 4, 8, 16};
  for (int trial = 0; trial < 200; ++trial) {
    const int side = sides[trial % 4];
    const int heads = 1 + trial % 3;
    const double s = rng.uniform(0.5, 2.0);
    const bool symmetric = trial % 5 == 0;
    const AttentionScores in_scores = random_self(heads, side, rng);
    const RegionIndexMap idx = region_indices(side, side);
    AttentionScores out = clone_self_attention(in_scores, idx, s, symmetric);
    const auto& A = idx.role(Role::kA);
    const auto& Ap = idx.role(Role::kAPrime);
    const auto& B = idx.role(Role::kB);
    const auto& Bp = idx.role(Role::kBPrime);
    for (int h = 0; h < heads; ++h) {
      for (size_t i = 0; i < Ap.size(); ++i) {
        for (size_t j = 0; j < Bp.size(); ++j) {
          ASSERT_EQ(out.at(h, Ap[i], Bp[j]),
                    static_cast<float>(s) * in_scores.at(h, A[i], B[j]));
          if (symmetric) {
            ASSERT_EQ(out.at(h, Bp[j], Ap[i]),
                      static_cast<float>(s) * in_scores.at(h, B[j], A[i]));
          }
        }
      }
      const int n = side * side;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const bool cloned = (in(Ap, r) && in(Bp, c)) || (symmetric && in(Bp, r) && in(Ap, c));
          if (cloned) continue;
          float a = in_scores.at(h, r, c), b = out.at(h, r, c);
          ASSERT_EQ(std::memcmp(&a, &b, sizeof(float)), 0);
        }
      }
      softmax_rows(&out.at(h, 0, 0), n, n);
      for (int r = 0; r < n; ++r) {
        double sum = 0.0;
        for (int c = 0; c < n; ++c) sum += out.at(h, r, c);
        ASSERT_NEAR(sum, 1.0, 1e-6);
      }
    }
  }
}

TEST(SelfAttentionCloning, Errors) {
  AttentionScores s = AttentionScores::self(1, {4, 4});
  try {
    clone_self_attention(s, region_indices(2, 2), 1.3, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIndex);
  }
  try {
    clone_self_attention(s, region_indices(4, 4), 0.0, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig);
  }
}

TEST(CrossAttentionMasking, TwoByTwoThreeTokens) {
  Rng rng(5);
  const AttentionScores w = random_cross(1, 2, 3, rng);
  const AttentionScores out = mask_cross_attention(w, region_indices(2, 2));
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(0, r, c), 0.0f);
  }
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(0, 3, c), w.at(0, 3, c));
}

TEST(CrossAttentionMasking, QuarterOfRowsSurviveAndIdempotent) {
  Rng rng(6);
  for (int side : {2, 4, 8, 16}) {
    const AttentionScores w = random_cross(2, side, 7, rng);
    const RegionIndexMap idx = region_indices(side, side);
    const AttentionScores once = mask_cross_attention(w, idx);
    const AttentionScores twice = mask_cross_attention(once, idx);
    EXPECT_EQ(once.values, twice.values);
    int zero_rows = 0;
    for (int h = 0; h < 2; ++h) {
      for (int r = 0; r < side * side; ++r) {
        bool zero = true;
        for (int c = 0; c < 7; ++c) zero = zero && once.at(h, r, c) == 0.0f;
        zero_rows += zero;
        if (in(idx.role(Role::kBPrime), r)) {
          for (int c = 0; c < 7; ++c) ASSERT_EQ(once.at(h, r, c), w.at(h, r, c));
        }
      }
    }
    EXPECT_EQ(zero_rows * 4, 3 * 2 * side * side);
  }
}

TEST(CrossAttentionMasking, ResolutionMismatch) {
  Rng rng(1);
  const AttentionScores w = random_cross(1, 4, 3, rng);
  EXPECT_THROW(mask_cross_attention(w, region_indices(8, 8)), Error);
}

TEST(Gate, WindowsAndFlags) {
  SurgeryConfig cfg;
  EXPECT_EQ(gate(3, 500, cfg), (Gate{true, true}));
  EXPECT_EQ(gate(0, 500, cfg), (Gate{false, false}));
  EXPECT_EQ(gate(6, 500, cfg), (Gate{false, false}));
  EXPECT_EQ(gate(1, 0, cfg), (Gate{true, true}));
  EXPECT_EQ(gate(5, 999, cfg), (Gate{true, true}));
  cfg.sac_enabled = false;
  EXPECT_EQ(gate(3, 500, cfg), (Gate{false, true}));
  cfg.cam_enabled = false;
  EXPECT_EQ(gate(3, 500, cfg), (Gate{false, false}));
  cfg = SurgeryConfig();
  cfg.t_min = 100;
  cfg.t_max = 200;
  EXPECT_EQ(gate(3, 99, cfg), (Gate{false, false}));
  EXPECT_EQ(gate(3, 150, cfg), (Gate{true, true}));
  EXPECT_EQ(gate(3, 201, cfg), (Gate{false, false}));
}

TEST(Gate, ConfigValidation) {
  SurgeryConfig cfg;
  EXPECT_NO_THROW(cfg.validate(8, 1000));
  EXPECT_THROW(cfg.validate(4, 1000), Error);
  cfg.s = -1.0;
  EXPECT_THROW(cfg.validate(8, 1000), Error);
}

// Block-level tests on the real attention layers.
TEST(CrossAttentionBlock, MaskedOutputsZeroOutsideTargetAndExactInside) {
  for (int side : {2, 4, 8}) {
    Rng rng(side);
    auto fill = [&](int r, int c) {
      Mat<double> m(r, c);
      for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 0.5;
      return m;
    };
    const int C = 8, L = 5, D = 6;
    const Mat<double> x = fill(side * side, C), text = fill(L, D);
    const Mat<double> wq = fill(C, C), wk = fill(D, C), wv = fill(D, C), wo = fill(C, C);
    AttentionWeights<double> w{&wq, &wk, &wv, &wo};
    SurgeryConfig on;
    on.sac_enabled = false;
    SurgeryConfig off = on;
    off.cam_enabled = false;
    AttentionHooks h_on{&on, 10, {}, {}};
    AttentionHooks h_off{&off, 10, {}, {}};
    const Mat<double> masked = cross_attention_block(x, {side, side}, text, w, 2, 2, &h_on);
    const Mat<double> plain = cross_attention_block(x, {side, side}, text, w, 2, 2, &h_off);
    const Mat<double> unhooked = cross_attention_block(x, {side, side}, text, w, 2, 2, nullptr);
    ASSERT_EQ(std::memcmp(plain.data(), unhooked.data(), plain.size() * sizeof(double)), 0);
    const RegionIndexMap idx = region_indices(side, side);
    for (int r = 0; r < side * side; ++r) {
      for (int c = 0; c < C; ++c) {
        if (in(idx.role(Role::kBPrime), r)) {
          ASSERT_EQ(masked(r, c), plain(r, c));
        } else {
          ASSERT_EQ(masked(r, c), 0.0);
        }
      }
    }
    // CAM off: generic rows are nonzero.
    for (int r = 0; r < side * side; ++r) EXPECT_GT(plain.row(r).cwiseAbs().sum(), 0.0);
  }
}

TEST(CrossAttentionBlock, SingleTokenGetsFullWeight) {
  const int C = 4, side = 2;
  Mat<double> x = Mat<double>::Ones(side * side, C), text = Mat<double>::Ones(1, 3);
  Mat<double> wq = Mat<double>::Identity(C, C), wk = Mat<double>::Ones(3, C),
              wv = Mat<double>::Ones(3, C), wo = Mat<double>::Identity(C, C);
  AttentionWeights<double> w{&wq, &wk, &wv, &wo};
  SurgeryConfig off;
  off.cam_enabled = false;
  AttentionScores seen;
  AttentionHooks hooks{&off, 0, [](int, AttentionKind) { return true; },
                       [&](int, const AttentionScores& s) { seen = s; }};
  cross_attention_block(x, {side, side}, text, w, 2, 0, &hooks);
  ASSERT_EQ(seen.kind, AttentionKind::kCross);
  for (float v : seen.values) EXPECT_EQ(v, 1.0f);
}

TEST(SelfAttentionBlock, DisabledHooksAreTransparent) {
  Rng rng(3);
  auto fill = [&](int r, int c) {
    Mat<float> m(r, c);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal() * 0.5);
    return m;
  };
  const int C = 8, side = 4;
  const Mat<float> x = fill(side * side, C);
  const Mat<float> wq = fill(C, C), wk = fill(C, C), wv = fill(C, C), wo = fill(C, C);
  AttentionWeights<float> w{&wq, &wk, &wv, &wo};
  SurgeryConfig off;
  off.sac_enabled = off.cam_enabled = false;
  SurgeryConfig on;
  AttentionHooks h_off{&off, 0, {}, {}};
  AttentionHooks h_on{&on, 0, {}, {}};
  const Mat<float> a = self_attention_block(x, {side, side}, w, 2, 3, &h_off);
  const Mat<float> b = self_attention_block(x, {side, side}, w, 2, 3, nullptr);
  const Mat<float> c = self_attention_block(x, {side, side}, w, 2, 3, &h_on);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)), 0);
  EXPECT_GT((a - c).cwiseAbs().maxCoeff(), 0.0f);
  // Cloning rewrites score rows of A' only.
  const RegionIndexMap idx = region_indices(side, side);
  for (int r : idx.role(Role::kA)) EXPECT_EQ((a.row(r) - c.row(r)).cwiseAbs().maxCoeff(), 0.0f);
  for (int r : idx.role(Role::kB)) EXPECT_EQ((a.row(r) - c.row(r)).cwiseAbs().maxCoeff(), 0.0f);
}

TEST(SelfAttentionBlock, DumpIsPostSoftmax) {
  Rng rng(8);
  const int C = 4, side = 2;
  Mat<float> x(side * side, C);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
  const Mat<float> I = Mat<float>::Identity(C, C);
  AttentionWeights<float> w{&I, &I, &I, &I};
  SurgeryConfig on;
  AttentionScores seen;
  AttentionHooks hooks{&on, 0, [](int, AttentionKind k) { return k == AttentionKind::kSelf; },
                       [&](int, const AttentionScores& s) { seen = s; }};
  self_attention_block(x, {side, side}, w, 1, 2, &hooks);
  ASSERT_EQ(seen.kind, AttentionKind::kSelf);
  for (int r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += seen.at(0, r, c);
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace gridicl

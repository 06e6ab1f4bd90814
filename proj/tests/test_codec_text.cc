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

#include "gridicl/codec.h"
#include "gridicl/dataset.h"
#include "gridicl/errors.h"
#include "gridicl/text_encoder.h"
#include "test_util.h"

namespace gridicl {
namespace {

TEST(BilinearCodec, ConstantImageGivesConstantLatent) {
  BilinearCodec codec;
  Image img(64, 32, 3);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 64; ++x) {
      img.at(x, y, 0) = 0.25f;
      img.at(x, y, 1) = 0.5f;
      img.at(x, y, 2) = 0.75f;
    }
  }
  const LatentTensor z = codec.encode(img);
  ASSERT_EQ(z.channels, 4);
  ASSERT_EQ(z.height, 4);
  ASSERT_EQ(z.width, 8);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) {
      EXPECT_NEAR(z.at(0, 0, y, x), 0.25, 1e-7);
      EXPECT_NEAR(z.at(0, 1, y, x), 0.5, 1e-7);
      EXPECT_NEAR(z.at(0, 2, y, x), 0.75, 1e-7);
      EXPECT_EQ(z.at(0, 3, y, x), 0.0);
    }
  }
}

TEST(BilinearCodec, ZeroLatentDecodesBlackAndDecodeIsDeterministic) {
  BilinearCodec codec;
  const Image black = codec.decode(LatentTensor(1, 4, 4, 4));
  ASSERT_EQ(black.width(), 32);
  for (float v : black.data()) EXPECT_EQ(v, 0.0f);
  const Image img = testing::random_image(32, 16, 2);
  const LatentTensor z = codec.encode(img);
  EXPECT_TRUE(testing::bit_equal(codec.decode(z), codec.decode(z)));
}

TEST(BilinearCodec, DecodeClamps) {
  BilinearCodec codec;
  LatentTensor z(1, 4, 2, 2, 5.0);
  const Image out = codec.decode(z);
  for (float v : out.data()) EXPECT_EQ(v, 1.0f);
}

TEST(BilinearCodec, IndivisibleSidesThrow) {
  BilinearCodec codec;
  try {
    codec.encode(Image(20, 16, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

// Threshold from a measurement on clean sprites at the toy cell size
// (mean 26.6 dB, worst 22.7 dB).
TEST(BilinearCodec, RoundTripPsnrOnSprites) {
  BilinearCodec codec;
  const auto ds = make_balanced_dataset(10, 99, {64, 64});
  double sum = 0.0;
  int n = 0;
  for (const auto& s : ds) {
    for (const Image* im : {&s.a_prime, &s.b_prime_gt}) {
      sum += psnr(*im, codec.decode(codec.encode(*im)));
      ++n;
    }
  }
  EXPECT_GE(sum / n, 25.0);
}

TEST(SpaceToDepthCodec, BlockConstantImagesRoundTrip) {
  SpaceToDepthCodec codec;
  Image img(8, 6, 3);
  Rng rng(4);
  for (int by = 0; by < 3; ++by) {
    for (int bx = 0; bx < 4; ++bx) {
      for (int c = 0; c < 3; ++c) {
        const float v = static_cast<float>(rng.uniform());
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) img.at(2 * bx + dx, 2 * by + dy, c) = v;
        }
      }
    }
  }
  const Image back = codec.decode(codec.encode(img));
  for (size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6);
  }
}

TEST(SpaceToDepthCodec, EncodeOfDecodeIsIdentityInRange) {
  SpaceToDepthCodec codec;
  Image img = testing::random_image(8, 8, 5);
  for (float& v : img.data()) v = 0.4f + 0.2f * v;  // keep the decode away from clamping
  const LatentTensor z = codec.encode(img);
  const LatentTensor z2 = codec.encode(codec.decode(z));
  double worst = 0.0;
  for (size_t i = 0; i < z.values.size(); ++i) worst = std::max(worst, std::abs(z.values[i] - z2.values[i]));
  EXPECT_LT(worst, 1e-6);
}

TEST(MakeCodec, KnownNames) {
  EXPECT_EQ(make_codec("bilinear")->scale_factor(), 8);
  EXPECT_EQ(make_codec("space_to_depth")->scale_factor(), 2);
  EXPECT_THROW(make_codec("vae"), Error);
}

TEST(Tokenize, Layout) {
  const auto ids = tokenize("A Cat, a DOG!");
  ASSERT_EQ(ids.size(), 77u);
  EXPECT_EQ(ids[0], kBeginToken);
  EXPECT_EQ(ids[1], ids[3]);  // "a" twice, case-folded
  EXPECT_EQ(ids[5], kEndToken);
  for (size_t i = 6; i < ids.size(); ++i) EXPECT_EQ(ids[i], kPadToken);
  for (int i = 1; i < 5; ++i) {
    EXPECT_GE(ids[i], 3u);
    EXPECT_LT(ids[i], kVocabularySize);
  }
  EXPECT_EQ(tokenize("a cat a dog"), ids);
}

TEST(Tokenize, TruncatesKeepingEnd) {
  std::string many;
  for (int i = 0; i < 200; ++i) many += "w" + std::to_string(i) + " ";
  const auto ids = tokenize(many, 10);
  ASSERT_EQ(ids.size(), 10u);
  EXPECT_EQ(ids.front(), kBeginToken);
  EXPECT_EQ(ids.back(), kEndToken);
  for (int i = 1; i < 9; ++i) EXPECT_GE(ids[i], 3u);
}

TEST(Tokenize, EmptyPrompt) {
  const auto ids = tokenize("");
  EXPECT_EQ(ids[0], kBeginToken);
  EXPECT_EQ(ids[1], kEndToken);
  EXPECT_EQ(ids[2], kPadToken);
}

TEST(ToyTextEncoder, ShapeDeterminismAndPadRows) {
  ToyTextEncoder enc;
  const TextEmbedding e1 = enc.encode("close-up of a tiger's face");
  const TextEmbedding e2 = enc.encode("close-up of a tiger's face");
  EXPECT_EQ(e1, e2);
  EXPECT_EQ(e1.length, 77);
  EXPECT_EQ(e1.dim, 64);
  EXPECT_EQ(e1.values.size(), 77u * 64u);
  const auto ids = tokenize("close-up of a tiger's face");
  for (int t = 0; t < 77; ++t) {
    if (ids[t] != kPadToken) continue;
    for (int j = 0; j < 64; ++j) ASSERT_EQ(e1.at(t, j), 0.0f);
  }
  const TextEmbedding other = ToyTextEncoder(16, 8).encode("anything at all");
  EXPECT_EQ(other.length, 16);
  EXPECT_EQ(other.dim, 8);
}

TEST(ToyTextEncoder, DistinctWordsAreNotParallel) {
  ToyTextEncoder enc;
  const TextEmbedding cat = enc.encode("cat");
  const TextEmbedding dog = enc.encode("dog");
  double dot = 0.0, nc = 0.0, nd = 0.0;
  for (size_t i = 0; i < cat.values.size(); ++i) {
    dot += static_cast<double>(cat.values[i]) * dog.values[i];
    nc += static_cast<double>(cat.values[i]) * cat.values[i];
    nd += static_cast<double>(dog.values[i]) * dog.values[i];
  }
  EXPECT_LT(dot / std::sqrt(nc * nd), 0.99);
}

TEST(PromptBundle, SharedShape) {
  ToyTextEncoder enc;
  const PromptBundle b = make_prompt_bundle(enc, "", "Messy, Disordered");
  EXPECT_EQ(b.positive_emb.length, b.negative_emb.length);
  EXPECT_EQ(b.positive_emb.dim, b.negative_emb.dim);
  EXPECT_NE(b.positive_emb, b.negative_emb);
}

}  // namespace
}  // namespace gridicl

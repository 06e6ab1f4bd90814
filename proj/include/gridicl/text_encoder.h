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

#ifndef GRIDICL_TEXT_ENCODER_H_
#define GRIDICL_TEXT_ENCODER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gridicl {

// L x d row-major token embeddings.
struct TextEmbedding {
  int length = 0;
  int dim = 0;
  std::vector<float> values;

  float at(int token, int j) const { return values[static_cast<size_t>(token) * dim + j]; }
  bool operator==(const TextEmbedding&) const = default;
};

inline constexpr uint32_t kPadToken = 0;
inline constexpr uint32_t kBeginToken = 1;
inline constexpr uint32_t kEndToken = 2;
inline constexpr uint32_t kVocabularySize = 65536;
inline constexpr int kDefaultTextLength = 77;
inline constexpr int kDefaultTextDim = 64;

// Lowercases, splits on anything that is not an ASCII letter or digit and
// hashes each word into [3, 65536). Output is exactly `max_len` ids:
// BEGIN, words (truncated to max_len - 2), END, then PAD.
std::vector<uint32_t> tokenize(std::string_view text, int max_len = kDefaultTextLength);

// Adapter contract for text encoders: any string -> (length x dim) map with
// fixed length and dim can stand in for the toy encoder.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual int length() const = 0;
  virtual int dim() const = 0;
  virtual TextEmbedding encode(std::string_view text) const = 0;
};

// Frozen hash-embedding encoder: each id maps to a seeded Gaussian row plus
// a sinusoidal position code; PAD rows are zero.
class ToyTextEncoder final : public TextEncoder {
 public:
  explicit ToyTextEncoder(int length = kDefaultTextLength, int dim = kDefaultTextDim,
                          uint64_t seed = 0x7e47e47eULL);

  int length() const override { return length_; }
  int dim() const override { return dim_; }
  TextEmbedding encode(std::string_view text) const override;
  TextEmbedding embed(const std::vector<uint32_t>& tokens) const;

 private:
  int length_;
  int dim_;
  uint64_t seed_;
};

// Positive and negative prompts with their embeddings; both share (L, d).
struct PromptBundle {
  std::string positive;
  std::string negative;
  TextEmbedding positive_emb;
  TextEmbedding negative_emb;
};

PromptBundle make_prompt_bundle(const TextEncoder& encoder, std::string positive,
                                std::string negative);

}  // namespace gridicl

#endif  // GRIDICL_TEXT_ENCODER_H_

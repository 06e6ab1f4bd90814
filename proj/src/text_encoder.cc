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

#include "gridicl/text_encoder.h"

#include <cctype>
#include <cmath>

#include "gridicl/errors.h"
#include "gridicl/random.h"

namespace gridicl {

namespace {

uint32_t fnv1a(std::string_view word) {
  uint32_t h = 2166136261u;
  for (char ch : word) {
    h ^= static_cast<uint8_t>(ch);
    h *= 16777619u;
  }
  return h;
}

constexpr double kPositionScale = 0.5;

}  // namespace

std::vector<uint32_t> tokenize(std::string_view text, int max_len) {
  if (max_len < 2) throw Error(ErrorKind::kInvalidConfig, "token length must be >= 2");
  std::vector<uint32_t> ids;
  ids.reserve(max_len);
  ids.push_back(kBeginToken);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (static_cast<int>(ids.size()) < max_len - 1) {
      ids.push_back(3 + fnv1a(word) % (kVocabularySize - 3));
    }
    word.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      word.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  ids.push_back(kEndToken);
  ids.resize(max_len, kPadToken);
  return ids;
}

ToyTextEncoder::ToyTextEncoder(int length, int dim, uint64_t seed)
    : length_(length), dim_(dim), seed_(seed) {
  if (length < 2 || dim < 2) throw Error(ErrorKind::kInvalidConfig, "bad text encoder shape");
}

TextEmbedding ToyTextEncoder::embed(const std::vector<uint32_t>& tokens) const {
  if (static_cast<int>(tokens.size()) != length_) {
    throw Error(ErrorKind::kShape, "token sequence length does not match encoder");
  }
  TextEmbedding e{length_, dim_, std::vector<float>(static_cast<size_t>(length_) * dim_, 0.0f)};
  for (int i = 0; i < length_; ++i) {
    const uint32_t id = tokens[i];
    if (id >= kVocabularySize) throw Error(ErrorKind::kInvalidInput, "token id out of range");
    if (id == kPadToken) continue;
    Rng rng(derive_seed(seed_, id));
    for (int j = 0; j < dim_; ++j) {
      const double freq = std::exp(-std::log(10000.0) * (j / 2) * 2.0 / dim_);
      const double pos = (j % 2 == 0) ? std::sin(i * freq) : std::cos(i * freq);
      e.values[static_cast<size_t>(i) * dim_ + j] =
          static_cast<float>(rng.normal() + kPositionScale * pos);
    }
  }
  return e;
}

TextEmbedding ToyTextEncoder::encode(std::string_view text) const {
  return embed(tokenize(text, length_));
}

PromptBundle make_prompt_bundle(const TextEncoder& encoder, std::string positive,
                                std::string negative) {
  PromptBundle b;
  b.positive_emb = encoder.encode(positive);
  b.negative_emb = encoder.encode(negative);
  b.positive = std::move(positive);
  b.negative = std::move(negative);
  return b;
}

}  // namespace gridicl

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

#ifndef GRIDICL_PROMPTING_H_
#define GRIDICL_PROMPTING_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridicl/image.h"

namespace gridicl {

// The fixed question sent with the annotated grid.
std::string build_instruction();

// "Messy, Disordered, ..., Random".
std::string negative_prompt();

// Longest answer accepted from the model.
inline constexpr size_t kMaxAnswerChars = 300;

// Trims whitespace and one or more layers of matching surrounding quotes.
// Throws kMalformedResponse when nothing is left or the answer is too long.
std::string normalize_answer(std::string_view raw);

std::string base64_encode(std::span<const uint8_t> bytes);

struct VlmEndpoint {
  // Full URL of an OpenAI-compatible chat-completions route, e.g.
  // http://127.0.0.1:8080/v1/chat/completions. A URL without a path gets
  // /v1/chat/completions appended.
  std::string url;
  std::string api_key;
  std::string model = "default";
  double timeout_seconds = 30.0;
  int retries = 2;
  size_t max_image_bytes = 4u << 20;
};

// Reads ANALOGIST_VLM_URL, ANALOGIST_VLM_KEY and ANALOGIST_VLM_MODEL,
// keeping `base` values for unset variables.
VlmEndpoint endpoint_from_env(VlmEndpoint base = VlmEndpoint());

nlohmann::json build_request_body(const std::string& model, const std::string& instruction,
                                   std::span<const uint8_t> png);

// Extracts the first text segment of choices[0].message.content.
// Throws kMalformedResponse.
std::string parse_response(std::string_view body);

// POSTs the annotated grid and instruction; returns the normalized answer.
// Transport failures are retried `retries` times before kTransport is
// thrown. Malformed answers are not retried.
std::string request_prompt(const VlmEndpoint& endpoint, const Image& annotated,
                           const std::string& instruction);

}  // namespace gridicl

#endif  // GRIDICL_PROMPTING_H_

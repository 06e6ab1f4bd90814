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

#include "gridicl/prompting.h"

#include <cctype>

#include "gridicl/errors.h"

namespace gridicl {

std::string build_instruction() {
  return "The image is a 2x2 grid of four cells. The letter in the top-left corner of each cell "
         "names it: A (top left), A' (top right), B (bottom left) and B' (bottom right). The "
         "arrows point from A to A' and from B to B'. A' is the result of applying some "
         "transformation to A. B' is unknown and should be the result of applying the same "
         "transformation to B. Reply with only a short description, in at most one sentence, of "
         "what the image for B' should look like. Do not mention the grid, the letters or the "
         "arrows.";
}

std::string negative_prompt() {
  return "Messy, Disordered, Chaotic, Cluttered, Haphazard, Unkempt, Scattered, Disheveled, "
         "Tangled, Random";
}

std::string normalize_answer(std::string_view raw) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto trim = [&](std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
  };
  std::string_view s = trim(raw);
  while (s.size() >= 2) {
    const char f = s.front();
    const char b = s.back();
    if (!((f == '"' && b == '"') || (f == '\'' && b == '\'') || (f == '`' && b == '`'))) break;
    s = trim(s.substr(1, s.size() - 2));
  }
  if (s.empty()) throw Error(ErrorKind::kMalformedResponse, "empty answer");
  if (s.size() > kMaxAnswerChars) {
    throw Error(ErrorKind::kMalformedResponse,
                "answer has " + std::to_string(s.size()) + " characters, limit is " +
                    std::to_string(kMaxAnswerChars));
  }
  return std::string(s);
}

std::string base64_encode(std::span<const uint8_t> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

nlohmann::json build_request_body(const std::string& model, const std::string& instruction,
                                  std::span<const uint8_t> png) {
  nlohmann::json text = {{"type", "text"}, {"text", instruction}};
  nlohmann::json image = {
      {"type", "image_url"},
      {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}};
  return {{"model", model},
          {"messages", nlohmann::json::array({{{"role", "user"},
                                               {"content", nlohmann::json::array({text, image})}}})}};
}

std::string parse_response(std::string_view body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kMalformedResponse, "response is not JSON");
  const nlohmann::json* content = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr) {
    throw Error(ErrorKind::kMalformedResponse, "response has no choices[0].message.content");
  }
  if (content->is_string()) return normalize_answer(content->get<std::string>());
  if (content->is_array()) {
    for (const auto& part : *content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        return normalize_answer(part["text"].get<std::string>());
      }
    }
  }
  throw Error(ErrorKind::kMalformedResponse, "response content has no text segment");
}

}  // namespace gridicl

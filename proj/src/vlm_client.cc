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

#include <chrono>
#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "gridicl/errors.h"
#include "gridicl/prompting.h"

namespace gridicl {

namespace {

constexpr char kDefaultRoute[] = "/v1/chat/completions";

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex kPattern(R"(^(https?://[^/\s]+)(/\S*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, kPattern)) {
    throw Error(ErrorKind::kInvalidConfig, "unsupported VLM endpoint URL '" + url + "'");
  }
  ParsedUrl out{m[1].str(), m[2].matched ? m[2].str() : std::string()};
  if (out.path.empty() || out.path == "/") out.path = kDefaultRoute;
  return out;
}

void set_timeouts(httplib::Client& client, double seconds) {
  const auto d = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(seconds));
  const time_t sec = static_cast<time_t>(d.count() / 1000000);
  const time_t usec = static_cast<time_t>(d.count() % 1000000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

}  // namespace

VlmEndpoint endpoint_from_env(VlmEndpoint base) {
  if (const char* v = std::getenv("ANALOGIST_VLM_URL"); v != nullptr && *v != '\0') base.url = v;
  if (const char* v = std::getenv("ANALOGIST_VLM_KEY"); v != nullptr && *v != '\0') {
    base.api_key = v;
  }
  if (const char* v = std::getenv("ANALOGIST_VLM_MODEL"); v != nullptr && *v != '\0') {
    base.model = v;
  }
  return base;
}

std::string request_prompt(const VlmEndpoint& endpoint, const Image& annotated,
                           const std::string& instruction) {
  if (endpoint.url.empty()) throw Error(ErrorKind::kTransport, "no VLM endpoint configured");
  if (endpoint.retries < 0 || !(endpoint.timeout_seconds > 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "VLM retries must be >= 0 and timeout > 0");
  }
  const ParsedUrl url = parse_url(endpoint.url);
  const std::vector<uint8_t> png = encode_png(annotated);
  if (png.size() > endpoint.max_image_bytes) {
    throw Error(ErrorKind::kInvalidInput, "annotated grid is " + std::to_string(png.size()) +
                                              " bytes, budget is " +
                                              std::to_string(endpoint.max_image_bytes));
  }
  const std::string body = build_request_body(endpoint.model, instruction, png).dump();

  httplib::Client client(url.origin);
  set_timeouts(client, endpoint.timeout_seconds);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }

  std::string last_error;
  const int attempts = endpoint.retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Result res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    return parse_response(res->body);
  }
  throw Error(ErrorKind::kTransport, "VLM request failed after " + std::to_string(attempts) +
                                         " attempts: " + last_error);
}

}  // namespace gridicl

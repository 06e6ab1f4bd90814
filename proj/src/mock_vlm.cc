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

#include "gridicl/mock_vlm.h"

#include <chrono>

#include <httplib.h>

#include "gridicl/errors.h"

namespace gridicl {

struct MockVlmServer::State {
  httplib::Server server;
};

MockVlmServer::MockVlmServer(MockVlmOptions options)
    : options_(std::move(options)), state_(std::make_unique<State>()) {
  install_routes();
}

MockVlmServer::~MockVlmServer() { stop(); }

void MockVlmServer::install_routes() {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const int n = ++requests_;
    {
      std::lock_guard<std::mutex> lock(mu_);
      last_request_ = nlohmann::json::parse(req.body, nullptr, false);
    }
    if (options_.delay_seconds > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(options_.delay_seconds));
    }
    if (n <= options_.fail_first) {
      res.status = 503;
      res.set_content(R"({"error":"unavailable"})", "application/json");
      return;
    }
    nlohmann::json body = {
        {"id", "mock-" + std::to_string(n)},
        {"object", "chat.completion"},
        {"choices",
         nlohmann::json::array({{{"index", 0},
                                 {"message", {{"role", "assistant"}, {"content", options_.answer}}},
                                 {"finish_reason", "stop"}}})}};
    res.set_content(body.dump(), "application/json");
  };
  state_->server.Post("/v1/chat/completions", handler);
  state_->server.Post("/chat/completions", handler);
}

int MockVlmServer::start(int port) {
  if (thread_.joinable()) throw Error(ErrorKind::kInvalidInput, "mock server already running");
  if (port == 0) {
    port_ = state_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = state_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw Error(ErrorKind::kIo, "mock VLM server could not bind");
  thread_ = std::thread([this] { state_->server.listen_after_bind(); });
  state_->server.wait_until_ready();
  return port_;
}

void MockVlmServer::serve_forever(int port) {
  port_ = port;
  if (!state_->server.listen("127.0.0.1", port)) {
    throw Error(ErrorKind::kIo, "mock VLM server could not listen on port " + std::to_string(port));
  }
}

void MockVlmServer::stop() {
  state_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockVlmServer::url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

nlohmann::json MockVlmServer::last_request() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_request_;
}

}  // namespace gridicl

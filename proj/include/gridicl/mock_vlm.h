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

#ifndef GRIDICL_MOCK_VLM_H_
#define GRIDICL_MOCK_VLM_H_

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace gridicl {

struct MockVlmOptions {
  // Returned as choices[0].message.content.
  std::string answer = "close-up of a tiger's face";
  // Sleep before answering, to exercise client timeouts.
  double delay_seconds = 0.0;
  // The first N requests get HTTP 503.
  int fail_first = 0;
};

// Local chat-completions endpoint speaking the same wire format as the real
// service. Serves on 127.0.0.1 from a background thread.
class MockVlmServer {
 public:
  explicit MockVlmServer(MockVlmOptions options = {});
  ~MockVlmServer();
  MockVlmServer(const MockVlmServer&) = delete;
  MockVlmServer& operator=(const MockVlmServer&) = delete;

  // Binds (port 0 picks a free one) and starts serving; returns the port.
  int start(int port = 0);
  // Blocks serving on the calling thread until stop() is called elsewhere.
  void serve_forever(int port);
  void stop();

  std::string url() const;
  int port() const { return port_; }
  int request_count() const { return requests_.load(); }
  nlohmann::json last_request() const;

 private:
  struct State;
  void install_routes();

  MockVlmOptions options_;
  std::unique_ptr<State> state_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  nlohmann::json last_request_;
};

}  // namespace gridicl

#endif  // GRIDICL_MOCK_VLM_H_

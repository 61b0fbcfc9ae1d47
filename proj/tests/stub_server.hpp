// Copyright 2026 The cradle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef CRADLE_TESTS_STUB_SERVER_HPP_
#define CRADLE_TESTS_STUB_SERVER_HPP_

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include "cradle/llm.hpp"
#include "httplib.h"

namespace cradle::testing {

// Local chat-completions endpoint driven by a handler.
class Stub {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;
  explicit Stub(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   int n = calls_++;
                   last_auth_ = req.get_header_value("Authorization");
                   last_body_ = req.body;
                   handler_(req, res, n);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::jthread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Stub() { server_.stop(); }

  llm::HttpOptions Options(std::string key = "sk-test-key") const {
    llm::HttpOptions o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    o.api_key = std::move(key);
    o.attempt_timeout = std::chrono::milliseconds(2000);
    o.backoff_base = std::chrono::milliseconds(1);
    return o;
  }
  int calls() const { return calls_; }
  std::string last_auth() const { return last_auth_; }
  std::string last_body() const { return last_body_; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_auth_, last_body_;
  std::jthread thread_;
};

}  // namespace cradle::testing

#endif  // CRADLE_TESTS_STUB_SERVER_HPP_

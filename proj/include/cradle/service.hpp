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

#ifndef CRADLE_SERVICE_HPP_
#define CRADLE_SERVICE_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cradle/error.hpp"
#include "cradle/session.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace cradle::service {

struct ApiError {
  int http_status = 500;
  std::string code;
  std::string message;
};

ApiError ToApiError(const Error& e);
int HttpStatusFor(ErrorCode code);

struct ServiceOptions {
  std::string bind = "127.0.0.1";
  int port = 8745;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
  std::chrono::milliseconds heartbeat{15'000};
  std::chrono::minutes dedupe_window{10};
  // Scrubbed from every response body.
  std::vector<std::string> secrets;
};

// HTTP facade over a SessionManager. Endpoints:
//   GET  /api/designs
//   POST /api/sessions
//   GET  /api/sessions/{id}
//   POST /api/sessions/{id}/messages
//   GET  /api/sessions/{id}/events?since=n[&follow=0]
//   GET  /api/sessions/{id}/variants
//   GET  /api/sessions/{id}/variants/{vid}/source
class Service {
 public:
  Service(session::SessionManager& sessions, ServiceOptions options);
  ~Service();

  // Binds; throws PortInUse. Returns the bound port.
  int Bind();
  // Serves until Stop(); call after Bind().
  void Listen();
  // Bind() and serve on a background thread.
  int Start();
  void Stop();
  int port() const { return port_; }

 private:
  void Routes();

  struct Dedupe;
  session::SessionManager& sessions_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<Dedupe> dedupe_;
  std::shared_ptr<std::atomic<bool>> stopping_;
  std::jthread thread_;
  int port_ = 0;
};

}  // namespace cradle::service

#endif  // CRADLE_SERVICE_HPP_

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

#include "cradle/service.hpp"

#include <map>
#include <mutex>
#include <utility>

#include "cradle/agent.hpp"
#include "cradle/design.hpp"
#include "cradle/llm.hpp"
#include "httplib.h"

namespace cradle::service {

namespace fs = std::filesystem;
using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSessionNotFound:
    case ErrorCode::kNoSuchVariant:
    case ErrorCode::kMissingDesign:
      return 404;
    case ErrorCode::kBadState:
      return 409;
    case ErrorCode::kUnknownCommand:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidDesign:
    case ErrorCode::kEmptyDesign:
    case ErrorCode::kMissingTestbench:
    case ErrorCode::kAmbiguousTop:
    case ErrorCode::kCyclicHierarchy:
      return 400;
    case ErrorCode::kAuthError:
    case ErrorCode::kRateLimited:
    case ErrorCode::kGatewayError:
    case ErrorCode::kMalformedResponse:
      return 502;
    default:
      return 500;
  }
}

ApiError ToApiError(const Error& e) {
  return {HttpStatusFor(e.code()), std::string(ErrorCodeName(e.code())), e.what()};
}

struct Service::Dedupe {
  struct Entry {
    std::int64_t seq;
    std::chrono::steady_clock::time_point at;
  };
  std::mutex mu;
  std::map<std::pair<std::string, std::string>, Entry> seen;

  void Expire(std::chrono::minutes window) {
    auto now = std::chrono::steady_clock::now();
    std::erase_if(seen, [&](const auto& kv) { return now - kv.second.at > window; });
  }
};

namespace {

std::string Scrub(std::string body, const std::vector<std::string>& secrets) {
  for (const auto& s : secrets) body = llm::Redact(body, s);
  return body;
}

json BestSummary(const session::SessionSnapshot& s) {
  json best = {{"variant", s.best_id}};
  auto ref = s.variants.find(0);
  auto b = s.variants.find(s.best_id);
  if (b != s.variants.end() && b->second.metrics) {
    best["metrics"] = *b->second.metrics;
    if (ref != s.variants.end() && ref->second.metrics) {
      best["reductions"] = agent::Reductions(*ref->second.metrics, *b->second.metrics);
    }
  }
  return best;
}

json SessionJson(const session::SessionSnapshot& s) {
  json j = {{"id", s.id},
            {"state", session::StateName(s.state)},
            {"design", s.design},
            {"config", s.config},
            {"last_seq", s.last_seq},
            {"pending_guidance", s.guidance.size()}};
  if (s.variants.contains(0)) j["best"] = BestSummary(s);
  if (s.accepted_id) j["accepted"] = *s.accepted_id;
  return j;
}

json VariantsJson(const session::SessionSnapshot& s) {
  json arr = json::array();
  auto ref = s.variants.find(0);
  for (const auto& [id, v] : s.variants) {
    json j = {{"id", id}, {"iteration", v.iteration}};
    j["verdict"] = v.verdict ? json(*v.verdict) : json(nullptr);
    if (v.metrics) {
      j["metrics"] = *v.metrics;
      if (ref != s.variants.end() && ref->second.metrics) {
        j["reductions"] = agent::Reductions(*ref->second.metrics, *v.metrics);
      }
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::int64_t ParseSince(const httplib::Request& req) {
  if (!req.has_param("since")) return 0;
  const std::string v = req.get_param_value("since");
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || n < 0) {
    throw Error(ErrorCode::kInvalidArgument, "since must be a non-negative integer");
  }
  return n;
}

}  // namespace

Service::Service(session::SessionManager& sessions, ServiceOptions options)
    : sessions_(sessions),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()),
      dedupe_(std::make_unique<Dedupe>()),
      stopping_(std::make_shared<std::atomic<bool>>(false)) {
  server_->new_task_queue = [] { return new httplib::ThreadPool(32); };
  // httplib defaults to SO_REUSEPORT, which would let a second server share
  // the port instead of failing with PortInUse.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  Routes();
}

Service::~Service() { Stop(); }

void Service::Routes() {
  auto& srv = *server_;
  const auto secrets = options_.secrets;

  auto send_json = [secrets](httplib::Response& res, int status, const json& j) {
    res.status = status;
    res.set_content(Scrub(j.dump(-1, ' ', false, json::error_handler_t::replace),
                          secrets),
                    "application/json");
  };
  auto send_error = [send_json](httplib::Response& res, const ApiError& e) {
    send_json(res, e.http_status, {{"code", e.code}, {"message", e.message}});
  };
  // Runs a handler, mapping module errors to ApiError bodies.
  auto guarded = [send_error](auto fn) {
    return [send_error, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, ToApiError(e));
      } catch (const json::exception& e) {
        send_error(res, {400, "InvalidArgument", e.what()});
      } catch (const std::exception& e) {
        send_error(res, {500, "Internal", e.what()});
      }
    };
  };

  srv.Get("/api/designs", guarded([this, send_json](const httplib::Request&,
                                                    httplib::Response& res) {
    json arr = json::array();
    fs::path root = sessions_.deps().workspace / "designs";
    std::vector<fs::path> dirs;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(root, ec)) {
      if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      try {
        DesignUnit u = LoadDesignDir(d, d.filename().string());
        auto texts = u.SourceTexts();
        std::vector<std::string_view> views(texts.begin(), texts.end());
        arr.push_back({{"name", u.name},
                       {"top", u.top_module},
                       {"hierarchy", ExtractHierarchy(views, u.top_module)}});
      } catch (const Error&) {
        // Unloadable designs are not offered.
      }
    }
    send_json(res, 200, arr);
  }));

  srv.Post("/api/sessions", guarded([this, send_json](const httplib::Request& req,
                                                      httplib::Response& res) {
    json body = json::parse(req.body.empty() ? "{}" : req.body);
    if (!body.contains("design") || !body.at("design").is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "body needs a design name");
    }
    agent::LoopConfig cfg;
    if (body.contains("config")) cfg = body.at("config").get<agent::LoopConfig>();
    auto s = sessions_.Create(body.at("design").get<std::string>(), cfg);
    auto snap = s->Snapshot();
    send_json(res, 201, {{"id", snap.id}, {"state", session::StateName(snap.state)}});
  }));

  srv.Get(R"(/api/sessions/([^/]+))",
          guarded([this, send_json](const httplib::Request& req,
                                    httplib::Response& res) {
            auto s = sessions_.Get(req.matches[1]);
            send_json(res, 200, SessionJson(s->Snapshot()));
          }));

  srv.Post(R"(/api/sessions/([^/]+)/messages)",
           guarded([this, send_json](const httplib::Request& req,
                                     httplib::Response& res) {
             auto s = sessions_.Get(req.matches[1]);
             json body = json::parse(req.body);
             if (!body.contains("text") || !body.at("text").is_string()) {
               throw Error(ErrorCode::kInvalidArgument, "body needs text");
             }
             std::string text = body.at("text").get<std::string>();
             if (text.empty()) throw Error(ErrorCode::kInvalidArgument, "empty message");
             std::string dedupe_id;
             if (body.contains("dedupe_id") && body.at("dedupe_id").is_string()) {
               dedupe_id = body.at("dedupe_id").get<std::string>();
             }
             if (dedupe_id.empty()) {
               auto r = s->PostMessage(text);
               send_json(res, 202, {{"accepted_seq", r.accepted_seq}});
               return;
             }
             // Held across the post so a concurrent retry waits for the first.
             std::lock_guard lock(dedupe_->mu);
             dedupe_->Expire(options_.dedupe_window);
             auto key = std::make_pair(s->id(), dedupe_id);
             if (auto it = dedupe_->seen.find(key); it != dedupe_->seen.end()) {
               send_json(res, 202,
                         {{"accepted_seq", it->second.seq}, {"duplicate", true}});
               return;
             }
             auto r = s->PostMessage(text);
             dedupe_->seen[key] = {r.accepted_seq, std::chrono::steady_clock::now()};
             send_json(res, 202, {{"accepted_seq", r.accepted_seq}});
           }));

  srv.Get(R"(/api/sessions/([^/]+)/events)",
          guarded([this, secrets](const httplib::Request& req,
                                  httplib::Response& res) {
            auto s = sessions_.Get(req.matches[1]);
            auto cursor = std::make_shared<std::int64_t>(ParseSince(req));
            bool follow = !(req.has_param("follow") &&
                            req.get_param_value("follow") == "0");
            auto heartbeat = options_.heartbeat;
            auto stopping = stopping_;
            auto last_write = std::make_shared<std::chrono::steady_clock::time_point>(
                std::chrono::steady_clock::now());
            res.set_chunked_content_provider(
                "application/x-ndjson",
                [s, cursor, follow, heartbeat, stopping, last_write, secrets](
                    std::size_t, httplib::DataSink& sink) {
                  auto events = s->ReadEvents(*cursor);
                  for (const auto& e : events) {
                    std::string line = Scrub(EventLine(e), secrets);
                    line.push_back('\n');
                    if (!sink.write(line.data(), line.size())) return false;
                    *cursor = e.seq;
                    *last_write = std::chrono::steady_clock::now();
                  }
                  if (!follow || stopping->load()) {
                    sink.done();
                    return true;
                  }
                  if (events.empty()) {
                    auto wait = std::min<std::chrono::milliseconds>(
                        heartbeat, std::chrono::milliseconds(250));
                    s->WaitForEvents(*cursor, wait);
                    if (std::chrono::steady_clock::now() - *last_write >= heartbeat) {
                      if (!sink.write("\n", 1)) return false;
                      *last_write = std::chrono::steady_clock::now();
                    }
                  }
                  return sink.is_writable();
                });
          }));

  srv.Get(R"(/api/sessions/([^/]+)/variants)",
          guarded([this, send_json](const httplib::Request& req,
                                    httplib::Response& res) {
            auto s = sessions_.Get(req.matches[1]);
            send_json(res, 200, VariantsJson(s->Snapshot()));
          }));

  srv.Get(R"(/api/sessions/([^/]+)/variants/(\d+)/source)",
          guarded([this, secrets](const httplib::Request& req,
                                  httplib::Response& res) {
            auto s = sessions_.Get(req.matches[1]);
            std::int64_t vid = 0;
            try {
              vid = std::stoll(req.matches[2]);
            } catch (const std::exception&) {
              throw Error(ErrorCode::kNoSuchVariant, "no variant " +
                                                         std::string(req.matches[2]));
            }
            auto src = s->VariantSource(vid);
            if (!src) throw Error(ErrorCode::kNoSuchVariant,
                                  "no variant " + std::to_string(vid));
            res.status = 200;
            res.set_content(Scrub(*src, secrets), "text/plain");
          }));

  if (options_.static_dir) {
    srv.set_mount_point("/", options_.static_dir->string());
  }
}

int Service::Bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.bind);
  } else {
    port_ = server_->bind_to_port(options_.bind, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::kPortInUse, "cannot bind " + options_.bind + ":" +
                                           std::to_string(options_.port));
  }
  return port_;
}

void Service::Listen() { server_->listen_after_bind(); }

int Service::Start() {
  int p = Bind();
  thread_ = std::jthread([this] { Listen(); });
  server_->wait_until_ready();
  return p;
}

void Service::Stop() {
  stopping_->store(true);
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cradle::service

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

#include <gtest/gtest.h>

#include "cradle/service.hpp"
#include "httplib.h"
#include "test_util.hpp"

namespace cradle::service {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::FakeEda;
using testing::MarkedCandidate;
using testing::MarkerOutcome;

constexpr const char* kSecret = "sk-SERVICE-SCRUB-777";

std::string Fence(const std::string& code) { return "```verilog\n" + code + "```\n"; }

struct Server {
  testing::TempDir tmp;
  std::unique_ptr<session::SessionManager> manager;
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;

  explicit Server(std::chrono::milliseconds heartbeat = std::chrono::milliseconds(15'000)) {
    WriteDesign(tmp.path(), testing::SmallDesign("counter8"));
    WriteDesign(tmp.path(), testing::SmallDesign("adder"));
    auto eda = std::make_shared<FakeEda>();
    eda->decide = MarkerOutcome;
    session::SessionDeps deps;
    deps.workspace = tmp.path();
    deps.eda = eda;
    deps.chat_factory = [](const std::string& design) {
      // The reply mentions the credential; responses must never carry it.
      return std::make_shared<llm::ScriptedBackend>(std::vector<llm::ScriptEntry>{
          {std::string(agent::kOptimizerTask),
           std::string("STEP 1: shrink ") + kSecret + "\nCONTINUE\n"},
          {std::string(agent::kRewriterTask), Fence(MarkedCandidate(design, 52, 6))},
          {std::string(agent::kOptimizerTask), "NO_FURTHER_OPTIMIZATION\n"}});
    };
    manager = std::make_unique<session::SessionManager>(deps);
    ServiceOptions opts;
    opts.port = 0;
    opts.heartbeat = heartbeat;
    opts.secrets = {kSecret};
    service = std::make_unique<Service>(*manager, opts);
    int port = service->Start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(10, 0);
  }
  ~Server() {
    service->Stop();
    manager->Shutdown();
  }

  std::string NewSession(const std::string& design = "counter8") {
    auto r = client->Post("/api/sessions", json{{"design", design}}.dump(),
                          "application/json");
    EXPECT_EQ(r->status, 201);
    return json::parse(r->body).at("id").get<std::string>();
  }
  httplib::Result Post(const std::string& id, json body) {
    return client->Post("/api/sessions/" + id + "/messages", body.dump(),
                        "application/json");
  }
  std::vector<json> Events(const std::string& id, std::int64_t since) {
    auto r = client->Get("/api/sessions/" + id + "/events?since=" +
                         std::to_string(since) + "&follow=0");
    EXPECT_EQ(r->status, 200);
    std::vector<json> out;
    std::istringstream in(r->body);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
  }
};

TEST(Service, ListsDesigns) {
  Server s;
  auto r = s.client->Get("/api/designs");
  ASSERT_EQ(r->status, 200);
  auto j = json::parse(r->body);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["name"], "adder");
  EXPECT_EQ(j[1]["top"], "counter8");
  EXPECT_TRUE(j[1].contains("hierarchy"));
}

TEST(Service, OptimizeStreamsPlan) {
  Server s;
  std::string id = s.NewSession();
  auto posted = s.Post(id, {{"text", "/optimize"}});
  ASSERT_EQ(posted->status, 202);
  EXPECT_GT(json::parse(posted->body)["accepted_seq"].get<std::int64_t>(), 0);

  // Follow the live stream until the plan shows up.
  std::string buffer;
  bool saw_plan = false;
  auto r = s.client->Get("/api/sessions/" + id + "/events?since=0",
                         [&](const char* data, std::size_t n) {
                           buffer.append(data, n);
                           saw_plan = buffer.find("\"PlanCreated\"") != std::string::npos;
                           return !saw_plan;
                         });
  EXPECT_TRUE(saw_plan);

  s.manager->Get(id)->WaitIdle();
  auto events = s.Events(id, 0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i]["seq"], static_cast<std::int64_t>(i + 1));
  }
  EXPECT_EQ(events.back()["kind"], "LoopFinished");
  auto tail = s.Events(id, 3);
  ASSERT_EQ(tail.size(), events.size() - 3);
  EXPECT_EQ(tail.front(), events[3]);

  auto state = json::parse(s.client->Get("/api/sessions/" + id)->body);
  EXPECT_EQ(state["state"], "Finished");
  EXPECT_EQ(state["best"]["variant"], 1);
  EXPECT_EQ(state["best"]["reductions"]["LUT"], 48.0);

  auto variants = json::parse(s.client->Get("/api/sessions/" + id + "/variants")->body);
  EXPECT_EQ(variants.size(), 2u);
  auto src = s.client->Get("/api/sessions/" + id + "/variants/1/source");
  ASSERT_EQ(src->status, 200);
  EXPECT_NE(src->body.find("outcome Pass 52 6"), std::string::npos);
}

TEST(Service, DedupeReturnsFirstSeq) {
  Server s;
  std::string id = s.NewSession();
  auto a = s.Post(id, {{"text", "use fewer flops"}, {"dedupe_id", "m-1"}});
  auto b = s.Post(id, {{"text", "use fewer flops"}, {"dedupe_id", "m-1"}});
  ASSERT_EQ(a->status, 202);
  ASSERT_EQ(b->status, 202);
  auto ja = json::parse(a->body), jb = json::parse(b->body);
  EXPECT_EQ(ja["accepted_seq"], jb["accepted_seq"]);
  EXPECT_TRUE(jb["duplicate"].get<bool>());
  int guidance = 0;
  for (const auto& e : s.Events(id, 0)) guidance += e["kind"] == "UserMessage";
  EXPECT_EQ(guidance, 1);
  auto c = s.Post(id, {{"text", "use fewer flops"}, {"dedupe_id", "m-2"}});
  EXPECT_GT(json::parse(c->body)["accepted_seq"], ja["accepted_seq"]);
}

TEST(Service, ErrorStatuses) {
  Server s;
  std::string unknown = session::NewSessionId();
  EXPECT_EQ(s.client->Get("/api/sessions/" + unknown)->status, 404);
  EXPECT_EQ(s.Post(unknown, {{"text", "hi"}})->status, 404);
  auto missing = s.client->Post("/api/sessions", json{{"design", "nope"}}.dump(),
                                "application/json");
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["code"], "MissingDesign");
  EXPECT_EQ(s.client->Post("/api/sessions", "{", "application/json")->status, 400);

  std::string id = s.NewSession();
  EXPECT_EQ(s.Post(id, {{"text", ""}})->status, 400);
  EXPECT_EQ(s.Post(id, {{"text", "/bogus"}})->status, 400);
  auto bad = s.Post(id, {{"text", "/abort"}});
  EXPECT_EQ(bad->status, 409);
  EXPECT_EQ(json::parse(bad->body)["code"], "BadState");
  EXPECT_EQ(s.client->Get("/api/sessions/" + id + "/variants/5/source")->status, 404);
  EXPECT_EQ(s.client->Get("/api/sessions/" + id + "/events?since=x&follow=0")->status, 400);

  EXPECT_EQ(HttpStatusFor(ErrorCode::kAuthError), 502);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kIoError), 500);
}

TEST(Service, HeartbeatLines) {
  Server s(std::chrono::milliseconds(50));
  std::string id = s.NewSession();
  std::string buffer;
  int blanks = 0;
  s.client->Get("/api/sessions/" + id + "/events?since=1",
                [&](const char* data, std::size_t n) {
                  buffer.append(data, n);
                  blanks = static_cast<int>(std::count(buffer.begin(), buffer.end(), '\n'));
                  return blanks < 2;
                });
  EXPECT_GE(blanks, 2);
  EXPECT_EQ(buffer.find('{'), std::string::npos);
}

TEST(Service, NoCredentialInResponses) {
  Server s;
  std::string id = s.NewSession();
  s.Post(id, {{"text", "/optimize"}});
  s.manager->Get(id)->WaitIdle();
  for (const std::string& path : std::vector<std::string>
       {"/api/sessions/" + id, "/api/sessions/" + id + "/events?since=0&follow=0",
        "/api/sessions/" + id + "/variants", "/api/designs"}) {
    auto r = s.client->Get(path);
    ASSERT_EQ(r->status, 200) << path;
    EXPECT_EQ(r->body.find(kSecret), std::string::npos) << path;
  }
  auto plan = s.Events(id, 0);
  bool scrubbed = false;
  for (const auto& e : plan) {
    if (e["kind"] == "PlanCreated") {
      scrubbed |= e["payload"]["text"].get<std::string>().find("[redacted]") !=
                  std::string::npos;
    }
  }
  EXPECT_TRUE(scrubbed);
}

TEST(Service, PortInUse) {
  Server s;
  session::SessionManager m(s.manager->deps());
  ServiceOptions opts;
  opts.port = s.service->port();
  Service second(m, opts);
  try {
    second.Bind();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPortInUse);
  }
}

}  // namespace
}  // namespace cradle::service

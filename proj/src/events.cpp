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

#include "cradle/events.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "cradle/error.hpp"

namespace cradle {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 9> kNames = {{
    {EventKind::kUserMessage, "UserMessage"},
    {EventKind::kAgentMessage, "AgentMessage"},
    {EventKind::kPlanCreated, "PlanCreated"},
    {EventKind::kCandidateProduced, "CandidateProduced"},
    {EventKind::kVerificationResult, "VerificationResult"},
    {EventKind::kMetricsMeasured, "MetricsMeasured"},
    {EventKind::kBestUpdated, "BestUpdated"},
    {EventKind::kLoopFinished, "LoopFinished"},
    {EventKind::kError, "Error"},
}};

}  // namespace

std::string_view EventKindName(EventKind k) {
  for (const auto& [kind, name] : kNames) {
    if (kind == k) return name;
  }
  return "Error";
}

EventKind ParseEventKind(std::string_view name) {
  for (const auto& [kind, n] : kNames) {
    if (n == name) return kind;
  }
  throw Error(ErrorCode::kCorruptLog,
              "unknown event kind '" + std::string(name) + "'");
}

nlohmann::json ToJson(const SessionEvent& e) {
  return {{"seq", e.seq},
          {"ts", e.ts},
          {"kind", EventKindName(e.kind)},
          {"payload", e.payload}};
}

SessionEvent EventFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("seq") || !j["seq"].is_number_integer() ||
      !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorCode::kCorruptLog, "malformed event record");
  }
  SessionEvent e;
  e.seq = j["seq"].get<std::int64_t>();
  e.ts = j.value("ts", "");
  e.kind = ParseEventKind(j["kind"].get<std::string>());
  e.payload = j.contains("payload") ? j["payload"] : nlohmann::json::object();
  return e;
}

std::string NowRfc3339() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const std::time_t secs = system_clock::to_time_t(now);
  const auto ms =
      duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::string EventLine(const SessionEvent& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["ts"] = e.ts;
  j["kind"] = EventKindName(e.kind);
  j["payload"] = e.payload;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace cradle

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

#ifndef CRADLE_EVENTS_HPP_
#define CRADLE_EVENTS_HPP_

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cradle {

enum class EventKind {
  kUserMessage,
  kAgentMessage,
  kPlanCreated,
  kCandidateProduced,
  kVerificationResult,
  kMetricsMeasured,
  kBestUpdated,
  kLoopFinished,
  kError,
};

std::string_view EventKindName(EventKind k);
EventKind ParseEventKind(std::string_view name);

// One line of events.jsonl:
//   {"seq":n,"ts":"<RFC3339>","kind":"...","payload":{...}}
struct SessionEvent {
  std::int64_t seq = 0;
  std::string ts;
  EventKind kind = EventKind::kAgentMessage;
  nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json ToJson(const SessionEvent& e);
// One log line without the newline, keys in seq, ts, kind, payload order.
std::string EventLine(const SessionEvent& e);
// Throws CorruptLog on a malformed object.
SessionEvent EventFromJson(const nlohmann::json& j);

// Current UTC time, millisecond precision, e.g. 2026-10-15T01:33:00.123Z.
std::string NowRfc3339();

// Where the exploration loop reports state transitions.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void Emit(EventKind kind, nlohmann::json payload) = 0;
};

class MemorySink : public EventSink {
 public:
  void Emit(EventKind kind, nlohmann::json payload) override {
    std::lock_guard lock(mu_);
    events_.emplace_back(kind, std::move(payload));
  }
  std::vector<std::pair<EventKind, nlohmann::json>> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::pair<EventKind, nlohmann::json>> events_;
};

}  // namespace cradle

#endif  // CRADLE_EVENTS_HPP_

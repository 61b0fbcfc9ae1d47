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

#ifndef CRADLE_SESSION_HPP_
#define CRADLE_SESSION_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cradle/agent.hpp"
#include "cradle/design.hpp"
#include "cradle/error.hpp"
#include "cradle/eda.hpp"
#include "cradle/events.hpp"
#include "cradle/llm.hpp"
#include "cradle/tool_config.hpp"

namespace cradle::session {

enum class SessionState { kIdle, kExploring, kFinished };
std::string_view StateName(SessionState s);

// Append-only, fsync'd JSONL event log with an in-memory mirror for readers.
class EventLog {
 public:
  // Opens or creates `path`. A truncated final record is discarded and cut
  // from the file; any other damage throws CorruptLog.
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  // Durable before it returns.
  SessionEvent Append(EventKind kind, nlohmann::json payload);
  // Events with seq > since, in order.
  std::vector<SessionEvent> ReadSince(std::int64_t since) const;
  // Waits until an event past `since` exists, the log closes, or timeout.
  bool WaitForMore(std::int64_t since, std::chrono::milliseconds timeout) const;
  std::int64_t last_seq() const;
  // Wakes all waiters; later waits return immediately.
  void Close();
  bool closed() const;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<SessionEvent> events_;
  bool closed_ = false;
};

struct LogContents {
  std::vector<SessionEvent> events;
  std::size_t valid_bytes = 0;  // prefix holding the complete records
  bool needs_newline = false;   // last record lacks its terminator
};

// Reads a log, dropping a truncated final record. Throws CorruptLog on a bad
// record elsewhere or non-consecutive seq numbers.
LogContents ReadLogFile(const std::filesystem::path& path);

struct VariantSummary {
  std::int64_t id = 0;
  int iteration = 0;
  std::optional<VerificationVerdict> verdict;
  std::optional<ResourceMetrics> metrics;
  std::optional<std::string> source;  // absent for the reference
  bool operator==(const VariantSummary&) const = default;
};

// Session state, reconstructed purely by folding events.
struct SessionSnapshot {
  std::string id;
  std::string design;
  SessionState state = SessionState::kIdle;
  std::vector<std::string> guidance;  // pending, arrival order
  agent::LoopConfig config;
  std::map<std::int64_t, VariantSummary> variants;
  std::int64_t best_id = 0;
  std::optional<std::int64_t> accepted_id;
  std::int64_t last_seq = 0;
  std::int64_t next_variant_id = 1;

  bool operator==(const SessionSnapshot& o) const;
};

// Applies one event. Throws CorruptLog when seq does not follow last_seq.
void Fold(SessionSnapshot& s, const SessionEvent& e);

// Folds a whole log. With `recover`, a log that ends mid-exploration reads as
// Finished with the last recorded best (or the reference).
SessionSnapshot FoldAll(std::span<const SessionEvent> events, bool recover);

// Event-sourced load of <workspace>/sessions/<id>/events.jsonl.
SessionSnapshot LoadSession(const std::filesystem::path& workspace,
                            std::string_view id);

std::filesystem::path SessionDir(const std::filesystem::path& workspace,
                                 std::string_view id);

struct SessionDeps {
  std::filesystem::path workspace;
  std::shared_ptr<EdaBackend> eda;
  ToolConfig tools = ToolConfig::Defaults();
  // Chat backend for a design's sessions.
  std::function<std::shared_ptr<llm::ChatBackend>(const std::string& design)>
      chat_factory;
  llm::ModelRouting routing;
};

struct PostResult {
  std::int64_t accepted_seq = 0;  // seq of the recorded UserMessage
  std::vector<SessionEvent> events;  // appended synchronously by the post
};

// One conversational session. Commands and loop events funnel through a
// single writer; reads go to the log mirror.
class Session : public EventSink {
 public:
  static std::shared_ptr<Session> Create(const SessionDeps& deps,
                                         const std::string& design_name,
                                         agent::LoopConfig config = {});
  // Reopens a persisted session. An exploration cut short by a crash is
  // closed with a recovery LoopFinished record.
  static std::shared_ptr<Session> Open(const SessionDeps& deps,
                                       const std::string& id);
  ~Session() override;

  // `/optimize [goal]`, `/status`, `/variants`, `/accept <id>`, `/abort`,
  // `/help`; anything else is guidance for the next planning round. Throws
  // UnknownCommand, BadState or NoSuchVariant after recording the message.
  PostResult PostMessage(const std::string& text);

  std::vector<SessionEvent> ReadEvents(std::int64_t since) const;
  bool WaitForEvents(std::int64_t since, std::chrono::milliseconds timeout) const;
  SessionSnapshot Snapshot() const;
  const DesignUnit& design() const { return design_; }
  const std::string& id() const { return id_; }
  std::filesystem::path dir() const;
  std::optional<std::string> VariantSource(std::int64_t id) const;
  llm::Usage usage() const;

  // Blocks until no exploration is running.
  void WaitIdle();
  // Stops the running exploration (if any) and closes the log.
  void Shutdown();

  void Emit(EventKind kind, nlohmann::json payload) override;

 private:
  Session(const SessionDeps& deps, std::string id, DesignUnit design);

  SessionEvent AppendLocked(EventKind kind, nlohmann::json payload);
  void PersistVariantFiles(const SessionEvent& e);
  std::vector<SessionEvent> HandleCommand(std::string_view cmd,
                                          std::string_view arg);
  void StartExploration(std::vector<std::string> guidance,
                        SessionState prior_state);
  std::vector<std::string> PendingGuidance();
  [[noreturn]] void Fail(ErrorCode code, const std::string& message);
  std::string StatusText() const;
  std::string VariantsText() const;

  SessionDeps deps_;
  std::string id_;
  DesignUnit design_;
  std::unique_ptr<EventLog> log_;
  std::shared_ptr<llm::Gateway> gateway_;

  mutable std::mutex mu_;  // single writer: log appends and snapshot
  SessionSnapshot snapshot_;

  std::mutex thread_mu_;
  std::jthread loop_;
};

// Owns the live sessions of one workspace.
class SessionManager {
 public:
  explicit SessionManager(SessionDeps deps);
  ~SessionManager();

  std::shared_ptr<Session> Create(const std::string& design,
                                  agent::LoopConfig config = {});
  // Live session, or reopened from disk. Throws SessionNotFound.
  std::shared_ptr<Session> Get(const std::string& id);
  void Shutdown();
  const SessionDeps& deps() const { return deps_; }

 private:
  SessionDeps deps_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// Random RFC 4122 version-4 UUID.
std::string NewSessionId();

}  // namespace cradle::session

#endif  // CRADLE_SESSION_HPP_

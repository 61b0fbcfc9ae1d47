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

#include "cradle/session.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <utility>

#include "cradle/error.hpp"

namespace cradle::session {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kHelp =
    "Commands:\n"
    "  /optimize [goal]  start an exploration with the pending guidance\n"
    "  /status           session state and best variant\n"
    "  /variants         list variants with verdicts and metrics\n"
    "  /accept <id>      copy a variant over the working copy\n"
    "  /abort            stop the running exploration\n"
    "  /help             this text\n"
    "Any other text is guidance for the next planning round.";

void WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIoError,
                  std::string("event log write: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void WriteFile(const fs::path& p, std::string_view text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
}

SessionState ParseState(std::string_view s) {
  if (s == "Idle") return SessionState::kIdle;
  if (s == "Exploring") return SessionState::kExploring;
  if (s == "Finished") return SessionState::kFinished;
  throw Error(ErrorCode::kCorruptLog, "unknown session state " + std::string(s));
}

std::int64_t ParseVariantId(std::string_view arg) {
  std::int64_t v = 0;
  if (arg.empty()) {
    throw Error(ErrorCode::kNoSuchVariant, "/accept needs a variant id");
  }
  for (char c : arg) {
    if (c < '0' || c > '9' || v > 1'000'000'000'000) {
      throw Error(ErrorCode::kNoSuchVariant,
                  "no variant " + std::string(arg));
    }
    v = v * 10 + (c - '0');
  }
  return v;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::string_view StateName(SessionState s) {
  switch (s) {
    case SessionState::kIdle: return "Idle";
    case SessionState::kExploring: return "Exploring";
    case SessionState::kFinished: return "Finished";
  }
  return "Idle";
}

// ---- log ------------------------------------------------------------------

LogContents ReadLogFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kSessionNotFound, "no event log at " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  LogContents out;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    bool terminated = nl != std::string::npos;
    std::string_view line(data.data() + pos,
                          (terminated ? nl : data.size()) - pos);
    std::size_t next = terminated ? nl + 1 : data.size();
    if (Trim(line).empty()) {
      if (terminated) out.valid_bytes = next;
      pos = next;
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      // Only an unterminated tail can be the victim of a torn write.
      if (!terminated) break;
      throw Error(ErrorCode::kCorruptLog,
                  "unparseable record at byte " + std::to_string(pos));
    }
    SessionEvent e = EventFromJson(j);
    std::int64_t expect = out.events.empty() ? 1 : out.events.back().seq + 1;
    if (e.seq != expect) {
      throw Error(ErrorCode::kCorruptLog,
                  "seq " + std::to_string(e.seq) + " where " +
                      std::to_string(expect) + " was expected");
    }
    out.events.push_back(std::move(e));
    out.valid_bytes = next;
    out.needs_newline = !terminated;
    pos = next;
  }
  return out;
}

EventLog::EventLog(fs::path path) : path_(std::move(path)) {
  fs::create_directories(path_.parent_path());
  if (fs::exists(path_)) {
    LogContents c = ReadLogFile(path_);
    std::error_code ec;
    if (fs::file_size(path_, ec) != c.valid_bytes) {
      fs::resize_file(path_, c.valid_bytes);
    }
    events_ = std::move(c.events);
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd_ >= 0 && c.needs_newline) WriteAll(fd_, "\n");
  } else {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  }
  if (fd_ < 0) {
    throw Error(ErrorCode::kIoError, "cannot open " + path_.string() + ": " +
                                         std::strerror(errno));
  }
  ::fsync(fd_);
}

EventLog::~EventLog() {
  Close();
  if (fd_ >= 0) ::close(fd_);
}

SessionEvent EventLog::Append(EventKind kind, json payload) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(ErrorCode::kBadState, "event log is closed");
  SessionEvent e;
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.ts = NowRfc3339();
  e.kind = kind;
  e.payload = std::move(payload);
  std::string line = EventLine(e);
  line.push_back('\n');
  WriteAll(fd_, line);
  if (::fsync(fd_) != 0) {
    throw Error(ErrorCode::kIoError,
                std::string("event log fsync: ") + std::strerror(errno));
  }
  events_.push_back(e);
  cv_.notify_all();
  return e;
}

std::vector<SessionEvent> EventLog::ReadSince(std::int64_t since) const {
  std::lock_guard lock(mu_);
  // seq n sits at index n-1.
  std::size_t start = since < 0 ? 0 : static_cast<std::size_t>(since);
  if (start >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(start), events_.end()};
}

bool EventLog::WaitForMore(std::int64_t since,
                           std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  auto ready = [&] {
    return closed_ || static_cast<std::int64_t>(events_.size()) > since;
  };
  cv_.wait_for(lock, timeout, ready);
  return static_cast<std::int64_t>(events_.size()) > since;
}

std::int64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return events_.empty() ? 0 : events_.back().seq;
}

void EventLog::Close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

bool EventLog::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

// ---- fold -----------------------------------------------------------------

bool SessionSnapshot::operator==(const SessionSnapshot& o) const {
  return id == o.id && design == o.design && state == o.state &&
         guidance == o.guidance && json(config) == json(o.config) &&
         variants == o.variants && best_id == o.best_id &&
         accepted_id == o.accepted_id && last_seq == o.last_seq &&
         next_variant_id == o.next_variant_id;
}

void Fold(SessionSnapshot& s, const SessionEvent& e) {
  if (e.seq != s.last_seq + 1) {
    throw Error(ErrorCode::kCorruptLog,
                "seq " + std::to_string(e.seq) + " after " +
                    std::to_string(s.last_seq));
  }
  s.last_seq = e.seq;
  const json& p = e.payload;
  try {
    switch (e.kind) {
      case EventKind::kUserMessage:
        if (p.value("kind", "") == "guidance") {
          s.guidance.push_back(p.at("text").get<std::string>());
        }
        break;
      case EventKind::kAgentMessage:
        if (p.contains("session")) {
          const json& init = p.at("session");
          s.id = init.at("id").get<std::string>();
          s.design = init.at("design").get<std::string>();
          s.config = init.at("config").get<agent::LoopConfig>();
        }
        if (p.contains("transition")) {
          s.state = ParseState(p.at("transition").get<std::string>());
          if (s.state == SessionState::kExploring) {
            s.guidance.clear();
            s.best_id = 0;
          }
        }
        if (p.contains("accepted")) {
          s.accepted_id = p.at("accepted").get<std::int64_t>();
        }
        break;
      case EventKind::kPlanCreated:
      case EventKind::kError:
        if (p.contains("guidance_consumed")) {
          std::size_t n = std::min(p.at("guidance_consumed").size(),
                                   s.guidance.size());
          s.guidance.erase(s.guidance.begin(),
                           s.guidance.begin() + static_cast<std::ptrdiff_t>(n));
        }
        break;
      case EventKind::kCandidateProduced: {
        auto id = p.at("variant").get<std::int64_t>();
        VariantSummary& v = s.variants[id];
        v.id = id;
        v.iteration = p.at("iteration").get<int>();
        v.source = p.at("source").get<std::string>();
        s.next_variant_id = std::max(s.next_variant_id, id + 1);
        break;
      }
      case EventKind::kVerificationResult: {
        auto id = p.at("variant").get<std::int64_t>();
        VariantSummary& v = s.variants[id];
        v.id = id;
        v.iteration = p.at("iteration").get<int>();
        v.verdict = p.at("verdict").get<VerificationVerdict>();
        break;
      }
      case EventKind::kMetricsMeasured: {
        auto id = p.at("variant").get<std::int64_t>();
        VariantSummary& v = s.variants[id];
        v.id = id;
        v.iteration = p.at("iteration").get<int>();
        v.metrics = p.at("metrics").get<ResourceMetrics>();
        break;
      }
      case EventKind::kBestUpdated:
        s.best_id = p.at("variant").get<std::int64_t>();
        break;
      case EventKind::kLoopFinished:
        s.state = SessionState::kFinished;
        s.best_id = p.at("best").get<std::int64_t>();
        break;
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kCorruptLog, "event " + std::to_string(e.seq) +
                                            ": " + ex.what());
  }
}

SessionSnapshot FoldAll(std::span<const SessionEvent> events, bool recover) {
  SessionSnapshot s;
  for (const auto& e : events) Fold(s, e);
  if (recover && s.state == SessionState::kExploring) {
    s.state = SessionState::kFinished;
  }
  return s;
}

fs::path SessionDir(const fs::path& workspace, std::string_view id) {
  return workspace / "sessions" / std::string(id);
}

namespace {

void CheckSessionId(std::string_view id) {
  bool ok = !id.empty() && id.size() <= 64;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') ok = false;
  }
  if (!ok) throw Error(ErrorCode::kSessionNotFound, "no session " + std::string(id));
}

}  // namespace

SessionSnapshot LoadSession(const fs::path& workspace, std::string_view id) {
  CheckSessionId(id);
  fs::path log = SessionDir(workspace, id) / "events.jsonl";
  if (!fs::exists(log)) {
    throw Error(ErrorCode::kSessionNotFound, "no session " + std::string(id));
  }
  LogContents c = ReadLogFile(log);
  return FoldAll(c.events, true);
}

std::string NewSessionId() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi, lo;
  {
    std::lock_guard lock(mu);
    hi = rng();
    lo = rng();
  }
  hi = (hi & ~0xF000ULL) | 0x4000ULL;
  lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xFFFF),
                static_cast<unsigned>(hi & 0xFFFF),
                static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return buf;
}

// ---- session --------------------------------------------------------------

Session::Session(const SessionDeps& deps, std::string id, DesignUnit design)
    : deps_(deps), id_(std::move(id)), design_(std::move(design)) {
  std::shared_ptr<llm::ChatBackend> backend;
  if (deps_.chat_factory) backend = deps_.chat_factory(design_.name);
  if (!backend) throw Error(ErrorCode::kInvalidArgument, "no chat backend");
  if (!deps_.eda) throw Error(ErrorCode::kInvalidArgument, "no EDA backend");
  gateway_ = std::make_shared<llm::Gateway>(std::move(backend), deps_.routing);
}

fs::path Session::dir() const { return SessionDir(deps_.workspace, id_); }

std::shared_ptr<Session> Session::Create(const SessionDeps& deps,
                                         const std::string& design_name,
                                         agent::LoopConfig config) {
  config.Validate();
  DesignUnit design = LoadDesign(deps.workspace, design_name);
  std::shared_ptr<Session> s(new Session(deps, NewSessionId(), std::move(design)));
  s->log_ = std::make_unique<EventLog>(s->dir() / "events.jsonl");
  std::lock_guard lock(s->mu_);
  s->AppendLocked(EventKind::kAgentMessage,
                  {{"session",
                    {{"id", s->id_}, {"design", design_name}, {"config", config}}},
                   {"text", "Session opened on design " + design_name +
                                " (top " + s->design_.top_module + ")."}});
  return s;
}

std::shared_ptr<Session> Session::Open(const SessionDeps& deps,
                                       const std::string& id) {
  CheckSessionId(id);
  fs::path log = SessionDir(deps.workspace, id) / "events.jsonl";
  if (!fs::exists(log)) throw Error(ErrorCode::kSessionNotFound, "no session " + id);
  auto log_ptr = std::make_unique<EventLog>(log);
  SessionSnapshot snap = FoldAll(log_ptr->ReadSince(0), false);
  if (snap.id != id) throw Error(ErrorCode::kCorruptLog, "log lacks its session record");
  DesignUnit design = LoadDesign(deps.workspace, snap.design);
  std::shared_ptr<Session> s(new Session(deps, id, std::move(design)));
  s->log_ = std::move(log_ptr);
  std::lock_guard lock(s->mu_);
  s->snapshot_ = std::move(snap);
  if (s->snapshot_.state == SessionState::kExploring) {
    // The process died mid-exploration: close it with the best recorded.
    const auto& vars = s->snapshot_.variants;
    std::int64_t best = s->snapshot_.best_id;
    json payload = {{"best", best},
                    {"recovered", true},
                    {"stopped_early", false},
                    {"cancelled", true},
                    {"aborted", "Interrupted"}};
    auto ref = vars.find(0);
    auto bv = vars.find(best);
    if (bv != vars.end() && bv->second.metrics) {
      payload["best_metrics"] = *bv->second.metrics;
      if (ref != vars.end() && ref->second.metrics) {
        payload["reductions"] = agent::Reductions(*ref->second.metrics,
                                                  *bv->second.metrics);
      }
    }
    s->AppendLocked(EventKind::kLoopFinished, std::move(payload));
  }
  return s;
}

Session::~Session() { Shutdown(); }

SessionEvent Session::AppendLocked(EventKind kind, json payload) {
  SessionEvent e = log_->Append(kind, std::move(payload));
  Fold(snapshot_, e);
  PersistVariantFiles(e);
  return e;
}

void Session::PersistVariantFiles(const SessionEvent& e) {
  if (e.kind != EventKind::kCandidateProduced &&
      e.kind != EventKind::kMetricsMeasured) {
    return;
  }
  auto id = e.payload.at("variant").get<std::int64_t>();
  fs::path vdir = dir() / "variants" / std::to_string(id);
  try {
    if (e.kind == EventKind::kCandidateProduced) {
      WriteFile(vdir / "candidate.v", e.payload.at("source").get<std::string>());
    } else {
      WriteFile(vdir / "metrics.json", e.payload.at("metrics").dump(2) + "\n");
    }
  } catch (const std::exception&) {
    // The event log is authoritative; these files are conveniences.
  }
}

void Session::Emit(EventKind kind, json payload) {
  std::lock_guard lock(mu_);
  AppendLocked(kind, std::move(payload));
}

std::vector<SessionEvent> Session::ReadEvents(std::int64_t since) const {
  return log_->ReadSince(since);
}

bool Session::WaitForEvents(std::int64_t since,
                            std::chrono::milliseconds timeout) const {
  return log_->WaitForMore(since, timeout);
}

SessionSnapshot Session::Snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::optional<std::string> Session::VariantSource(std::int64_t id) const {
  if (id == 0) return design_.CombinedSource();
  std::lock_guard lock(mu_);
  auto it = snapshot_.variants.find(id);
  if (it == snapshot_.variants.end() || !it->second.source) return std::nullopt;
  return it->second.source;
}

llm::Usage Session::usage() const { return gateway_->usage(); }

std::vector<std::string> Session::PendingGuidance() {
  std::lock_guard lock(mu_);
  return snapshot_.guidance;
}

void Session::Fail(ErrorCode code, const std::string& message) {
  {
    std::lock_guard lock(mu_);
    AppendLocked(EventKind::kError, {{"code", std::string(ErrorCodeName(code))},
                                     {"message", message},
                                     {"recoverable", true}});
  }
  throw Error(code, message);
}

std::string Session::StatusText() const {
  std::ostringstream out;
  out << "State: " << StateName(snapshot_.state) << "\nDesign: " << design_.name
      << " (top " << design_.top_module << ")\n";
  out << "Pending guidance: " << snapshot_.guidance.size() << "\n";
  out << "Best: "
      << (snapshot_.best_id == 0 ? std::string("reference")
                                 : "variant " + std::to_string(snapshot_.best_id));
  auto ref = snapshot_.variants.find(0);
  auto best = snapshot_.variants.find(snapshot_.best_id);
  if (best != snapshot_.variants.end() && best->second.metrics) {
    out << " (";
    bool first = true;
    for (const auto& [cls, n] : best->second.metrics->counts()) {
      out << (first ? "" : ", ") << cls << " " << n;
      first = false;
    }
    out << ")";
    if (ref != snapshot_.variants.end() && ref->second.metrics &&
        snapshot_.best_id != 0) {
      for (const auto& [cls, v] :
           agent::Reductions(*ref->second.metrics, *best->second.metrics)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %s -%.1f%%", cls.c_str(), v);
        out << buf;
      }
    }
  }
  if (snapshot_.accepted_id) out << "\nAccepted: variant " << *snapshot_.accepted_id;
  return out.str();
}

std::string Session::VariantsText() const {
  if (snapshot_.variants.empty()) return "No variants yet.";
  std::ostringstream out;
  for (const auto& [id, v] : snapshot_.variants) {
    out << (id == 0 ? "ref" : std::to_string(id)) << "  iter " << v.iteration
        << "  " << (v.verdict ? StatusName(v.verdict->status) : "pending");
    if (v.metrics) {
      for (const auto& [cls, n] : v.metrics->counts()) out << "  " << cls << "=" << n;
    }
    if (id == snapshot_.best_id) out << "  *best";
    out << "\n";
  }
  std::string s = out.str();
  s.pop_back();
  return s;
}

PostResult Session::PostMessage(const std::string& text) {
  std::lock_guard tlock(thread_mu_);
  std::string_view trimmed = Trim(text);
  bool command = !trimmed.empty() && trimmed.front() == '/';
  PostResult result;
  std::string cmd, arg;
  SessionState state;
  {
    std::lock_guard lock(mu_);
    state = snapshot_.state;
    json p = {{"text", text}};
    if (command) {
      std::string_view rest = trimmed.substr(1);
      auto sp = rest.find_first_of(" \t\n");
      cmd = std::string(rest.substr(0, sp));
      arg = sp == std::string_view::npos ? "" : std::string(Trim(rest.substr(sp)));
      p["kind"] = "command";
      p["command"] = cmd;
    } else {
      p["kind"] = "guidance";
    }
    SessionEvent e = AppendLocked(EventKind::kUserMessage, std::move(p));
    result.accepted_seq = e.seq;
    result.events.push_back(e);
    if (!command) {
      std::string reply =
          state == SessionState::kExploring
              ? "Guidance queued for the next planning round."
              : "Guidance stored for the next /optimize.";
      result.events.push_back(
          AppendLocked(EventKind::kAgentMessage, {{"text", reply}}));
      return result;
    }
  }
  auto more = HandleCommand(cmd, arg);
  result.events.insert(result.events.end(), more.begin(), more.end());
  return result;
}

std::vector<SessionEvent> Session::HandleCommand(std::string_view cmd,
                                                 std::string_view arg) {
  std::vector<SessionEvent> out;
  if (cmd == "help") {
    std::lock_guard lock(mu_);
    out.push_back(AppendLocked(EventKind::kAgentMessage, {{"text", kHelp}}));
    return out;
  }
  if (cmd == "status") {
    std::lock_guard lock(mu_);
    out.push_back(AppendLocked(EventKind::kAgentMessage,
                               {{"text", StatusText()},
                                {"status", StateName(snapshot_.state)}}));
    return out;
  }
  if (cmd == "variants") {
    std::lock_guard lock(mu_);
    out.push_back(AppendLocked(EventKind::kAgentMessage, {{"text", VariantsText()}}));
    return out;
  }
  if (cmd == "abort") {
    if (Snapshot().state != SessionState::kExploring) {
      Fail(ErrorCode::kBadState, "/abort: no exploration is running");
    }
    loop_.request_stop();
    std::lock_guard lock(mu_);
    out.push_back(AppendLocked(
        EventKind::kAgentMessage,
        {{"text", "Abort requested; the loop stops at its next step."}}));
    return out;
  }
  if (cmd == "accept") {
    SessionSnapshot snap = Snapshot();
    if (snap.state != SessionState::kFinished) {
      Fail(ErrorCode::kBadState, "/accept needs a finished exploration (state " +
                                     std::string(StateName(snap.state)) + ")");
    }
    std::int64_t id = 0;
    try {
      id = ParseVariantId(arg);
    } catch (const Error& e) {
      Fail(e.code(), e.what());
    }
    auto src = VariantSource(id);
    if (!src) Fail(ErrorCode::kNoSuchVariant, "no variant " + std::to_string(id));
    WriteFile(dir() / "working.v", *src);
    std::lock_guard lock(mu_);
    out.push_back(AppendLocked(
        EventKind::kAgentMessage,
        {{"accepted", id},
         {"text", "Working copy now holds " +
                      (id == 0 ? std::string("the reference")
                               : "variant " + std::to_string(id)) +
                      "."}}));
    return out;
  }
  if (cmd == "optimize") {
    SessionState prior;
    std::vector<std::string> guidance;
    {
      std::lock_guard lock(mu_);
      prior = snapshot_.state;
      if (prior == SessionState::kExploring) {
        // Fail takes mu_ itself.
      } else {
        guidance = snapshot_.guidance;
        if (!arg.empty()) guidance.emplace_back(arg);
      }
    }
    if (prior == SessionState::kExploring) {
      Fail(ErrorCode::kBadState, "an exploration is already running");
    }
    if (loop_.joinable()) loop_.join();
    {
      std::lock_guard lock(mu_);
      out.push_back(AppendLocked(
          EventKind::kAgentMessage,
          {{"transition", "Exploring"},
           {"guidance", guidance},
           {"text", "Starting exploration (up to " +
                        std::to_string(snapshot_.config.max_iterations) +
                        " iterations)."}}));
    }
    StartExploration(std::move(guidance), prior);
    return out;
  }
  Fail(ErrorCode::kUnknownCommand, "unknown command /" + std::string(cmd) +
                                       "; try /help");
}

void Session::StartExploration(std::vector<std::string> guidance,
                               SessionState prior_state) {
  agent::LoopConfig cfg = Snapshot().config;
  std::int64_t first_id = Snapshot().next_variant_id;
  loop_ = std::jthread([this, cfg, first_id, prior_state,
                        guidance = std::move(guidance)](std::stop_token st) {
    agent::LoopHooks hooks;
    hooks.sink = this;
    hooks.stop = st;
    hooks.initial_guidance = guidance;
    hooks.take_guidance = [this] { return PendingGuidance(); };
    hooks.first_variant_id = first_id;
    try {
      agent::RunLoop(design_, cfg, *deps_.eda, deps_.tools, *gateway_, hooks);
    } catch (const Error& e) {
      std::lock_guard lock(mu_);
      auto tail = log_->ReadSince(snapshot_.last_seq - 1);
      bool reported = !tail.empty() && tail.back().kind == EventKind::kError;
      if (snapshot_.state == SessionState::kExploring && !reported) {
        AppendLocked(EventKind::kError,
                     {{"code", std::string(ErrorCodeName(e.code()))},
                      {"message", e.what()},
                      {"recoverable", false}});
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      AppendLocked(EventKind::kError, {{"code", "Internal"},
                                       {"message", e.what()},
                                       {"recoverable", false}});
    }
    std::lock_guard lock(mu_);
    if (snapshot_.state == SessionState::kExploring) {
      AppendLocked(EventKind::kAgentMessage,
                   {{"transition", StateName(prior_state)},
                    {"text", "Exploration ended without a result."}});
    }
  });
}

void Session::WaitIdle() {
  std::lock_guard tlock(thread_mu_);
  if (loop_.joinable()) loop_.join();
}

void Session::Shutdown() {
  {
    std::lock_guard tlock(thread_mu_);
    if (loop_.joinable()) {
      loop_.request_stop();
      loop_.join();
    }
  }
  if (log_) log_->Close();
}

// ---- manager --------------------------------------------------------------

SessionManager::SessionManager(SessionDeps deps) : deps_(std::move(deps)) {}

SessionManager::~SessionManager() { Shutdown(); }

std::shared_ptr<Session> SessionManager::Create(const std::string& design,
                                                agent::LoopConfig config) {
  auto s = Session::Create(deps_, design, std::move(config));
  std::lock_guard lock(mu_);
  sessions_[s->id()] = s;
  return s;
}

std::shared_ptr<Session> SessionManager::Get(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it != sessions_.end()) return it->second;
  auto s = Session::Open(deps_, id);
  sessions_[id] = s;
  return s;
}

void SessionManager::Shutdown() {
  std::map<std::string, std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    all = sessions_;
  }
  for (auto& [id, s] : all) s->Shutdown();
}

}  // namespace cradle::session

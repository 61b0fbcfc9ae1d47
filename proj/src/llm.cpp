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

#include "cradle/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "cradle/error.hpp"
#include "httplib.h"

namespace cradle::llm {

std::string_view RoleName(Role r) {
  switch (r) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

void ChatRequest::Validate() const {
  if (messages.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "chat request has no messages");
  }
  if (messages.front().role == Role::kAssistant) {
    throw Error(ErrorCode::kInvalidArgument,
                "chat request must open with a system or user message");
  }
  if (temperature && (*temperature < 0.0 || *temperature > 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature outside [0, 2]");
  }
  if (max_tokens && *max_tokens <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
  }
}

std::string_view ChatRequest::LastUserMessage() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::kUser) return it->content;
  }
  return {};
}

nlohmann::json WireRequest(const ChatRequest& req) {
  nlohmann::json body = {{"model", req.model},
                         {"messages", nlohmann::json::array()}};
  for (const auto& m : req.messages) {
    body["messages"].push_back(
        {{"role", RoleName(m.role)}, {"content", m.content}});
  }
  if (req.temperature) body["temperature"] = *req.temperature;
  if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
  return body;
}

ChatResponse ParseWireResponse(std::string_view body) {
  ChatResponse resp;
  try {
    auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) {
      throw Error(ErrorCode::kMalformedResponse,
                  "first choice has no text content");
    }
    resp.text = content.get<std::string>();
    resp.model_echo = j.value("model", "");
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      resp.usage.prompt_tokens = u->value("prompt_tokens", std::int64_t{0});
      resp.usage.completion_tokens =
          u->value("completion_tokens", std::int64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse,
                std::string("unexpected completion body: ") + e.what());
  }
  if (resp.usage.prompt_tokens < 0 || resp.usage.completion_tokens < 0) {
    throw Error(ErrorCode::kMalformedResponse, "negative token usage");
  }
  return resp;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries)
    : entries_(std::move(entries)), used_(entries_.size(), false) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::FromFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read script " + path.string());
  std::vector<ScriptEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      entries.push_back(
          {j.value("match", std::string("*")), j.at("reply").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return std::make_unique<ScriptedBackend>(std::move(entries));
}

ChatResponse ScriptedBackend::Complete(const ChatRequest& req) {
  req.Validate();
  std::string_view last = req.LastUserMessage();
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (used_[i]) continue;
    const auto& e = entries_[i];
    if (e.match == "*" || last.find(e.match) != std::string_view::npos) {
      used_[i] = true;
      return ChatResponse{e.reply, {}, req.model, 0};
    }
  }
  throw Error(ErrorCode::kScriptExhausted,
              "no scripted reply left for this request");
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), false));
}

HttpOptions HttpOptions::FromEnvironment() {
  HttpOptions o;
  const char* base = std::getenv("CRADLE_API_BASE");
  o.base_url = base != nullptr && *base ? base : "https://api.openai.com/v1";
  const char* key = std::getenv("CRADLE_API_KEY");
  if (key != nullptr) o.api_key = key;
  return o;
}

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
  std::string_view url = options_.base_url;
  std::size_t scheme_end = url.find("://");
  std::size_t host_begin = scheme_end == std::string_view::npos ? 0 : scheme_end + 3;
  std::size_t path_begin = url.find('/', host_begin);
  if (path_begin == std::string_view::npos) {
    origin_ = std::string(url);
  } else {
    origin_ = std::string(url.substr(0, path_begin));
    path_prefix_ = std::string(url.substr(path_begin));
  }
  while (!path_prefix_.empty() && path_prefix_.back() == '/') {
    path_prefix_.pop_back();
  }
  if (options_.max_attempts < 1) options_.max_attempts = 1;
}

ChatResponse HttpBackend::Complete(const ChatRequest& req) {
  try {
    ChatResponse resp = CompleteOnce(req);
    resp.text = Redact(resp.text, options_.api_key);
    return resp;
  } catch (const Error& e) {
    throw Error(e.code(), Redact(e.what(), options_.api_key));
  }
}

ChatResponse HttpBackend::CompleteOnce(const ChatRequest& req) {
  req.Validate();
  if (options_.api_key.empty()) {
    throw Error(ErrorCode::kAuthError, "CRADLE_API_KEY is not set");
  }
  const std::string body = WireRequest(req).dump();
  const std::string path = path_prefix_ + "/chat/completions";
  httplib::Headers headers = {
      {"Authorization", "Bearer " + options_.api_key}};

  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.5, 1.0);

  std::string last_failure;
  bool rate_limited = false;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = options_.backoff_base * (1LL << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(
          delay * jitter(rng)));
    }
    httplib::Client client(origin_);
    const auto t = options_.attempt_timeout;
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(t);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(t - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, body, "application/json");
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw Error(ErrorCode::kAuthError,
                  "completion endpoint rejected the credential (HTTP " +
                      std::to_string(status) + ")");
    }
    if (status == 429) {
      rate_limited = true;
      last_failure = "HTTP 429";
      continue;
    }
    if (status >= 500) {
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw Error(ErrorCode::kMalformedResponse,
                  "completion endpoint answered HTTP " + std::to_string(status));
    }
    ChatResponse resp = ParseWireResponse(res->body);
    resp.latency_ms = latency.count();
    return resp;
  }
  throw Error(rate_limited ? ErrorCode::kRateLimited : ErrorCode::kGatewayError,
              "completion failed after " + std::to_string(options_.max_attempts) +
                  " attempts: " + last_failure);
}

std::string Redact(std::string_view text, std::string_view secret) {
  std::string out(text);
  if (secret.empty()) return out;
  for (std::size_t pos = out.find(secret); pos != std::string::npos;
       pos = out.find(secret, pos + 10)) {
    out.replace(pos, secret.size(), "[redacted]");
  }
  return out;
}

bool ModelRouting::AcceptsTemperature(std::string_view model) const {
  for (const auto& p : no_temperature_prefixes) {
    if (model.starts_with(p)) return false;
  }
  return true;
}

void to_json(nlohmann::json& j, const ModelRouting& r) {
  j = {{"reasoning_model", r.reasoning_model},
       {"completion_model", r.completion_model},
       {"temperature", r.temperature},
       {"no_temperature_prefixes", r.no_temperature_prefixes}};
}

void from_json(const nlohmann::json& j, ModelRouting& r) {
  r = ModelRouting{};
  r.reasoning_model = j.value("reasoning_model", r.reasoning_model);
  r.completion_model = j.value("completion_model", r.completion_model);
  r.temperature = j.value("temperature", r.temperature);
  r.no_temperature_prefixes =
      j.value("no_temperature_prefixes", r.no_temperature_prefixes);
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, ModelRouting routing)
    : backend_(std::move(backend)), routing_(std::move(routing)) {}

ChatRequest Gateway::MakeRequest(TaskLabel label,
                                 std::vector<ChatMessage> messages) const {
  ChatRequest req;
  req.label = label;
  req.model = label == TaskLabel::kReasoning ? routing_.reasoning_model
                                             : routing_.completion_model;
  req.messages = std::move(messages);
  req.temperature = routing_.AcceptsTemperature(req.model)
                        ? std::optional<double>(routing_.temperature)
                        : std::nullopt;
  return req;
}

ChatResponse Gateway::Complete(TaskLabel label,
                               std::vector<ChatMessage> messages,
                               std::optional<int> max_tokens) {
  ChatRequest req = MakeRequest(label, std::move(messages));
  req.max_tokens = max_tokens;
  return Complete(std::move(req));
}

ChatResponse Gateway::Complete(ChatRequest req) {
  if (req.model.empty()) {
    req.model = req.label == TaskLabel::kReasoning ? routing_.reasoning_model
                                                   : routing_.completion_model;
  }
  if (!routing_.AcceptsTemperature(req.model)) req.temperature.reset();
  {
    std::lock_guard lock(mu_);
    ++(req.label == TaskLabel::kReasoning ? reasoning_calls_
                                          : completion_calls_);
  }
  ChatResponse resp = backend_->Complete(req);
  std::lock_guard lock(mu_);
  usage_.prompt_tokens += resp.usage.prompt_tokens;
  usage_.completion_tokens += resp.usage.completion_tokens;
  return resp;
}

Usage Gateway::usage() const {
  std::lock_guard lock(mu_);
  return usage_;
}

std::int64_t Gateway::calls(TaskLabel label) const {
  std::lock_guard lock(mu_);
  return label == TaskLabel::kReasoning ? reasoning_calls_ : completion_calls_;
}

}  // namespace cradle::llm

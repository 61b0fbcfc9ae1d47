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

#ifndef CRADLE_LLM_HPP_
#define CRADLE_LLM_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cradle::llm {

enum class Role { kSystem, kUser, kAssistant };
std::string_view RoleName(Role r);

struct ChatMessage {
  Role role;
  std::string content;
};

// Reasoning requests go to the planning model, completion requests to the
// rewriting model.
enum class TaskLabel { kReasoning, kCompletion };

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  std::optional<double> temperature = 0.2;  // omitted from the wire when unset
  std::optional<int> max_tokens;
  TaskLabel label = TaskLabel::kCompletion;

  void Validate() const;
  // Content of the last user message, or empty.
  std::string_view LastUserMessage() const;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  Usage usage;
  std::string model_echo;
  std::int64_t latency_ms = 0;
};

// Request body for POST <base>/chat/completions.
nlohmann::json WireRequest(const ChatRequest& req);
// First choice's message content plus usage. Throws MalformedResponse.
ChatResponse ParseWireResponse(std::string_view body);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse Complete(const ChatRequest& req) = 0;
};

struct ScriptEntry {
  std::string match;  // substring of the last user message, or "*"
  std::string reply;
};

// Replays canned replies. Each call consumes the first unconsumed entry whose
// matcher accepts the request; none left raises ScriptExhausted.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> entries);
  // Newline-delimited {"match": ..., "reply": ...} objects.
  static std::unique_ptr<ScriptedBackend> FromFile(
      const std::filesystem::path& path);

  ChatResponse Complete(const ChatRequest& req) override;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScriptEntry> entries_;
  std::vector<bool> used_;
};

struct HttpOptions {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::chrono::milliseconds attempt_timeout{120'000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};

  // CRADLE_API_BASE (default https://api.openai.com/v1) and CRADLE_API_KEY.
  static HttpOptions FromEnvironment();
};

// Chat-completions over HTTP(S). Retries 429, 5xx and transport failures
// with exponential backoff and jitter.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpOptions options);
  ChatResponse Complete(const ChatRequest& req) override;

 private:
  ChatResponse CompleteOnce(const ChatRequest& req);

  HttpOptions options_;
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
};

// `text` with every occurrence of `secret` replaced by "[redacted]".
std::string Redact(std::string_view text, std::string_view secret);

struct ModelRouting {
  std::string reasoning_model = "o4-mini";
  std::string completion_model = "gpt-4.1";
  double temperature = 0.2;
  // Models matching one of these prefixes never get a temperature.
  std::vector<std::string> no_temperature_prefixes = {"o1", "o3", "o4"};

  bool AcceptsTemperature(std::string_view model) const;
};

void to_json(nlohmann::json& j, const ModelRouting& r);
void from_json(const nlohmann::json& j, ModelRouting& r);

// Routes labeled requests to models and accounts usage.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, ModelRouting routing = {});

  ChatResponse Complete(TaskLabel label, std::vector<ChatMessage> messages,
                        std::optional<int> max_tokens = {});
  // Fills in the model for the request's label when it is empty and drops
  // the temperature for models that reject it.
  ChatResponse Complete(ChatRequest req);

  ChatRequest MakeRequest(TaskLabel label,
                          std::vector<ChatMessage> messages) const;

  Usage usage() const;
  std::int64_t calls(TaskLabel label) const;
  const ModelRouting& routing() const { return routing_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  ModelRouting routing_;
  mutable std::mutex mu_;
  Usage usage_;
  std::int64_t reasoning_calls_ = 0;
  std::int64_t completion_calls_ = 0;
};

}  // namespace cradle::llm

#endif  // CRADLE_LLM_HPP_

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

#ifndef CRADLE_BACKENDS_HPP_
#define CRADLE_BACKENDS_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "cradle/eda.hpp"
#include "cradle/llm.hpp"

// Command-line backend selection shared by the CLI subcommands.
//   live            HTTP completions + installed tools
//   scripted:<path> scripted completions + installed tools
//   replay:<dir>    scripted completions + recorded tool results
// A scripted path that is a directory holds one <design>.jsonl per design.
// A replay directory holds script.jsonl (or scripts/<design>.jsonl) and the
// tool records in records/ (or the directory itself).
namespace cradle::backends {

enum class LlmKind { kLive, kScripted };
enum class EdaKind { kTools, kReplay };

struct BackendSpec {
  LlmKind llm = LlmKind::kLive;
  std::filesystem::path script;  // file or per-design directory
  EdaKind eda = EdaKind::kTools;
  std::filesystem::path records;
};

// Throws InvalidArgument on an unknown form.
BackendSpec ParseBackend(std::string_view text);
// `tools` or `replay:<dir>`; overrides the EDA half of `spec`.
void ApplyEdaOverride(BackendSpec& spec, std::string_view text);

using ChatFactory =
    std::function<std::shared_ptr<llm::ChatBackend>(const std::string& design)>;

ChatFactory MakeChatFactory(const BackendSpec& spec);
std::shared_ptr<EdaBackend> MakeEda(const BackendSpec& spec);

}  // namespace cradle::backends

#endif  // CRADLE_BACKENDS_HPP_

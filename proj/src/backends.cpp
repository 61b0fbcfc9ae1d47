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

#include "cradle/backends.hpp"

#include "cradle/error.hpp"

namespace cradle::backends {

namespace fs = std::filesystem;

namespace {

fs::path ScriptIn(const fs::path& dir) {
  if (fs::exists(dir / "scripts")) return dir / "scripts";
  return dir / "script.jsonl";
}

fs::path RecordsIn(const fs::path& dir) {
  if (fs::is_directory(dir / "records")) return dir / "records";
  return dir;
}

}  // namespace

BackendSpec ParseBackend(std::string_view text) {
  BackendSpec spec;
  if (text == "live") return spec;
  if (text.starts_with("scripted:") && text.size() > 9) {
    spec.llm = LlmKind::kScripted;
    spec.script = fs::path(std::string(text.substr(9)));
    return spec;
  }
  if (text.starts_with("replay:") && text.size() > 7) {
    fs::path dir(std::string(text.substr(7)));
    spec.llm = LlmKind::kScripted;
    spec.script = ScriptIn(dir);
    spec.eda = EdaKind::kReplay;
    spec.records = RecordsIn(dir);
    return spec;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "backend must be live, scripted:<file> or replay:<dir>, got " +
                  std::string(text));
}

void ApplyEdaOverride(BackendSpec& spec, std::string_view text) {
  if (text == "tools") {
    spec.eda = EdaKind::kTools;
    return;
  }
  if (text.starts_with("replay:") && text.size() > 7) {
    spec.eda = EdaKind::kReplay;
    spec.records = RecordsIn(fs::path(std::string(text.substr(7))));
    return;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "eda must be tools or replay:<dir>, got " + std::string(text));
}

ChatFactory MakeChatFactory(const BackendSpec& spec) {
  if (spec.llm == LlmKind::kLive) {
    auto options = llm::HttpOptions::FromEnvironment();
    return [options](const std::string&) -> std::shared_ptr<llm::ChatBackend> {
      return std::make_shared<llm::HttpBackend>(options);
    };
  }
  fs::path script = spec.script;
  if (!fs::exists(script)) {
    throw Error(ErrorCode::kInvalidArgument, "no script at " + script.string());
  }
  return [script](const std::string& design) -> std::shared_ptr<llm::ChatBackend> {
    if (fs::is_directory(script)) {
      fs::path per = script / (design + ".jsonl");
      if (!fs::exists(per)) {
        throw Error(ErrorCode::kScriptExhausted,
                    "no script for design " + design + " in " + script.string());
      }
      return llm::ScriptedBackend::FromFile(per);
    }
    return llm::ScriptedBackend::FromFile(script);
  };
}

std::shared_ptr<EdaBackend> MakeEda(const BackendSpec& spec) {
  if (spec.eda == EdaKind::kReplay) return ReplayBackend::FromDir(spec.records);
  return std::make_shared<ToolchainBackend>();
}

}  // namespace cradle::backends

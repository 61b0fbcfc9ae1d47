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

#ifndef CRADLE_PROCESS_HPP_
#define CRADLE_PROCESS_HPP_

#include <chrono>
#include <filesystem>
#include <stop_token>
#include <string>
#include <string_view>

namespace cradle {

inline constexpr std::chrono::seconds kKillGrace{5};

struct ProcessResult {
  int exit_code = -1;     // 128 + signal when killed by a signal
  bool timed_out = false;
  bool cancelled = false;
  std::string output;     // stdout and stderr interleaved
  std::chrono::milliseconds elapsed{0};
};

// Runs `command` via /bin/sh -c in its own process group with `cwd` as the
// working directory. On timeout or stop request the whole group gets SIGTERM,
// then SIGKILL after kKillGrace. Blocks on the global process slot limit.
ProcessResult RunShell(const std::string& command,
                       const std::filesystem::path& cwd,
                       std::chrono::seconds timeout,
                       std::stop_token stop = {});

// Bounds concurrently running external processes (default: 2x cores).
void SetMaxConcurrentProcesses(unsigned limit);
unsigned MaxConcurrentProcesses();

// First whitespace-delimited word of a command line.
std::string CommandWord(std::string_view command);
// True for absolute/relative paths that exist or names found on PATH.
bool CommandResolvable(std::string_view word);

// Per-invocation working directory, removed on destruction unless kept.
class ScratchDir {
 public:
  explicit ScratchDir(const std::filesystem::path& root = {});
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  void keep() { keep_ = true; }

 private:
  std::filesystem::path path_;
  bool keep_ = false;
};

}  // namespace cradle

#endif  // CRADLE_PROCESS_HPP_

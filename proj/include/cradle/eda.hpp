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

#ifndef CRADLE_EDA_HPP_
#define CRADLE_EDA_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cradle/design.hpp"
#include "cradle/process.hpp"
#include "cradle/tool_config.hpp"
#include "cradle/verdict.hpp"
#include "json.hpp"

namespace cradle {

struct SynthReport {
  ClassCounts cell_counts;
  std::filesystem::path netlist_path;
  // Keeps the synthesis scratch directory (and the netlist) alive.
  std::shared_ptr<ScratchDir> scratch;
};

// Synthesis, place-and-route and simulation behind one seam. Implementations
// are stateless per call and safe for concurrent use.
class EdaBackend {
 public:
  virtual ~EdaBackend() = default;

  virtual SynthReport Synthesize(std::span<const SourceFile> sources,
                                 std::string_view top, const ToolConfig& cfg,
                                 std::stop_token stop = {}) = 0;

  virtual ResourceMetrics PlaceAndRoute(const std::filesystem::path& netlist,
                                        const ToolConfig& cfg,
                                        std::stop_token stop = {}) = 0;

  // Compile failures, simulation failures and timeouts come back as
  // verdicts, never as exceptions.
  virtual VerificationVerdict Simulate(
      std::span<const SourceFile> sources,
      std::span<const SourceFile> testbench_files, const ToolConfig& cfg,
      const VerdictRules& rules, std::stop_token stop = {}) = 0;
};

// Synthesize followed by PlaceAndRoute.
ResourceMetrics Measure(EdaBackend& eda, std::span<const SourceFile> sources,
                        std::string_view top, const ToolConfig& cfg,
                        std::stop_token stop = {});

// Runs the configured command templates as subprocesses.
class ToolchainBackend : public EdaBackend {
 public:
  SynthReport Synthesize(std::span<const SourceFile> sources,
                         std::string_view top, const ToolConfig& cfg,
                         std::stop_token stop = {}) override;
  ResourceMetrics PlaceAndRoute(const std::filesystem::path& netlist,
                                const ToolConfig& cfg,
                                std::stop_token stop = {}) override;
  VerificationVerdict Simulate(std::span<const SourceFile> sources,
                               std::span<const SourceFile> testbench_files,
                               const ToolConfig& cfg, const VerdictRules& rules,
                               std::stop_token stop = {}) override;
};

enum class RecordKind { kSim, kSynth, kPnr };
std::string_view RecordKindName(RecordKind k);

// One line of a replay fixture file:
//   {"hash": "<hex>", "kind": "sim|synth|pnr", "payload": {...}}
// payloads: sim -> a verdict object; synth -> {"cell_counts": {...}};
// pnr -> {"counts": {...}}; any kind -> {"error": "<ErrorCode>", "message"}.
struct ReplayRecord {
  std::string hash;
  RecordKind kind;
  nlohmann::json payload;
};

ReplayRecord ParseReplayRecord(const nlohmann::json& j);
nlohmann::json ToJson(const ReplayRecord& r);

// Serves recorded responses keyed by (kind, content hash of the submitted
// design sources). Repeated records for one key are served in order, the
// last one sticking.
class ReplayBackend : public EdaBackend {
 public:
  explicit ReplayBackend(std::vector<ReplayRecord> records);
  // Reads every *.jsonl file in `fixture_dir`, in name order.
  static std::unique_ptr<ReplayBackend> FromDir(
      const std::filesystem::path& fixture_dir);

  SynthReport Synthesize(std::span<const SourceFile> sources,
                         std::string_view top, const ToolConfig& cfg,
                         std::stop_token stop = {}) override;
  ResourceMetrics PlaceAndRoute(const std::filesystem::path& netlist,
                                const ToolConfig& cfg,
                                std::stop_token stop = {}) override;
  VerificationVerdict Simulate(std::span<const SourceFile> sources,
                               std::span<const SourceFile> testbench_files,
                               const ToolConfig& cfg, const VerdictRules& rules,
                               std::stop_token stop = {}) override;

 private:
  const nlohmann::json& Lookup(RecordKind kind, const std::string& hash);

  struct Queue {
    std::vector<nlohmann::json> payloads;
    std::size_t next = 0;
  };
  std::mutex mu_;
  std::map<std::pair<RecordKind, std::string>, Queue> records_;
};

std::string SourcesHash(std::span<const SourceFile> sources);

}  // namespace cradle

#endif  // CRADLE_EDA_HPP_

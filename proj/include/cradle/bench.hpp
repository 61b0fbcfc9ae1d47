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

#ifndef CRADLE_BENCH_HPP_
#define CRADLE_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cradle/agent.hpp"
#include "cradle/design.hpp"
#include "cradle/eda.hpp"
#include "cradle/llm.hpp"
#include "cradle/tool_config.hpp"
#include "json.hpp"

namespace cradle::bench {

using Percentages = std::map<std::string, double, std::less<>>;

struct DesignOutcome {
  ResourceMetrics ref;
  ResourceMetrics best;
  bool improved = false;
  Percentages reductions;
  // One entry per candidate, e.g. "v2 i1 SimFail".
  std::vector<std::string> verdict_trail;
  std::int64_t best_id = 0;
  int iterations = 0;
  std::optional<std::string> aborted;
  // Informational; never part of the CSV.
  std::int64_t wall_ms = 0;
  llm::Usage tokens;

  bool operator==(const DesignOutcome& o) const;
};

struct SuiteResult {
  std::map<std::string, DesignOutcome> per_design;
  std::map<std::string, std::string> failures;  // name -> "Code: message"
  std::vector<std::string> skipped;              // load failures, "name: why"
  bool operator==(const SuiteResult&) const = default;
};

struct ReductionStats {
  // Mean over designs whose reduction is defined; nullopt when none are.
  std::map<std::string, std::optional<double>, std::less<>> mean_reduction;
  // Same with regressions counted as 0.
  std::map<std::string, std::optional<double>, std::less<>> mean_reduction_clamped;
  int improved_count = 0;
  int total_count = 0;
};

struct Suite {
  std::vector<DesignUnit> designs;  // sorted by name
  std::vector<std::string> skipped;
};

// Loads every design under `dir` (a workspace `designs/` directory); designs
// that fail to load are reported in `skipped`. Throws EmptySuite when no
// design loads.
Suite DiscoverSuite(const std::filesystem::path& dir);

struct RunOptions {
  agent::LoopConfig loop;
  ToolConfig tools = ToolConfig::Defaults();
  int parallelism = 1;
  std::shared_ptr<EdaBackend> eda;
  std::function<std::shared_ptr<llm::ChatBackend>(const std::string& design)>
      chat_factory;
  llm::ModelRouting routing;
  // Called as each design completes, from a worker thread.
  std::function<void(const std::string& design, bool ok)> progress;
};

// Runs the loop on every design with at most `parallelism` in flight.
// Failures are recorded per design; the call itself does not throw for them.
SuiteResult RunSuite(const Suite& suite, const RunOptions& opts);

ReductionStats Aggregate(const SuiteResult& results);

// `%.1f`, with -0.0 printed as 0.0.
std::string FormatPct(double v);
double RoundPct(double v);

std::string ToCsv(const SuiteResult& results);
// Percentages rounded to one decimal; includes the aggregate block.
nlohmann::json ToJson(const SuiteResult& results);
SuiteResult SuiteFromJson(const nlohmann::json& j);

// Writes `text` to `path`; throws IoError.
void WriteOutput(const std::filesystem::path& path, const std::string& text);

}  // namespace cradle::bench

#endif  // CRADLE_BENCH_HPP_

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

#ifndef CRADLE_REPORTS_HPP_
#define CRADLE_REPORTS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cradle/design.hpp"
#include "cradle/tool_config.hpp"

// Pure parsers for tool reports. Same text in, same counts out.
namespace cradle::reports {

// Cell-type counts from a yosys `stat -json` document. Reads the "design"
// summary when present, else the single module entry. Throws
// StatsUnparseable.
ClassCounts ParseSynthStats(std::string_view json_text);

struct UtilizationLine {
  std::string name;
  std::int64_t used = 0;
  std::int64_t available = 0;
  bool operator==(const UtilizationLine&) const = default;
};

// Lines of the form `Info: <NAME>: <used>/<avail> <pct>%`. A name seen twice
// (nextpnr repeats the block across flow stages) keeps its last value and
// first position.
std::vector<UtilizationLine> ParseUtilizationLines(std::string_view log);

// First rule whose pattern is a substring of `cell_name`, else the name.
std::string ClassFor(std::string_view cell_name,
                     std::span<const ClassRule> class_map);

ResourceMetrics FoldClasses(std::span<const UtilizationLine> lines,
                            std::span<const ClassRule> class_map);

// Throws UtilizationNotFound when no line matches.
ResourceMetrics ParsePnrUtilization(std::string_view log,
                                    std::span<const ClassRule> class_map);

// Accepts `{"counts": {...}}` or a bare `{class: count}` object.
ResourceMetrics ParseCountsJson(std::string_view json_text);

}  // namespace cradle::reports

#endif  // CRADLE_REPORTS_HPP_

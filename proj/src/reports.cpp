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

#include "cradle/reports.hpp"

#include <algorithm>
#include <regex>

#include "cradle/error.hpp"

namespace cradle::reports {

ClassCounts ParseSynthStats(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kStatsUnparseable,
                std::string("synthesis stats are not JSON: ") + e.what());
  }
  const nlohmann::json* summary = nullptr;
  if (doc.contains("design") && doc["design"].is_object()) {
    summary = &doc["design"];
  } else if (doc.contains("modules") && doc["modules"].is_object() &&
             doc["modules"].size() == 1) {
    summary = &doc["modules"].begin().value();
  }
  if (summary == nullptr || !summary->contains("num_cells_by_type") ||
      !(*summary)["num_cells_by_type"].is_object()) {
    throw Error(ErrorCode::kStatsUnparseable,
                "synthesis stats lack a design cell summary");
  }
  ClassCounts counts;
  for (const auto& [cell, n] : (*summary)["num_cells_by_type"].items()) {
    if (!n.is_number_integer() || n.get<std::int64_t>() < 0) {
      throw Error(ErrorCode::kStatsUnparseable,
                  "cell count for " + cell + " is not a non-negative integer");
    }
    // yosys escapes public names with a leading backslash
    std::string name = !cell.empty() && cell[0] == '\\' ? cell.substr(1) : cell;
    counts[name] += n.get<std::int64_t>();
  }
  return counts;
}

std::vector<UtilizationLine> ParseUtilizationLines(std::string_view log) {
  static const std::regex kLine(
      R"(^Info:\s+([^\s:]+):\s+(\d+)\s*/\s*(\d+)\s+(\d+)%\s*$)");
  std::vector<UtilizationLine> out;
  std::size_t start = 0;
  while (start < log.size()) {
    std::size_t nl = log.find('\n', start);
    std::size_t stop = nl == std::string_view::npos ? log.size() : nl;
    std::string line(log.substr(start, stop - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, kLine)) {
      UtilizationLine u{m[1].str(), std::stoll(m[2].str()),
                        std::stoll(m[3].str())};
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const auto& x) { return x.name == u.name; });
      if (it == out.end()) {
        out.push_back(std::move(u));
      } else {
        *it = std::move(u);
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

std::string ClassFor(std::string_view cell_name,
                     std::span<const ClassRule> class_map) {
  for (const auto& rule : class_map) {
    if (!rule.pattern.empty() &&
        cell_name.find(rule.pattern) != std::string_view::npos) {
      return rule.cls;
    }
  }
  return std::string(cell_name);
}

ResourceMetrics FoldClasses(std::span<const UtilizationLine> lines,
                            std::span<const ClassRule> class_map) {
  ResourceMetrics m;
  for (const auto& l : lines) m.add(ClassFor(l.name, class_map), l.used);
  return m;
}

ResourceMetrics ParsePnrUtilization(std::string_view log,
                                    std::span<const ClassRule> class_map) {
  auto lines = ParseUtilizationLines(log);
  if (lines.empty()) {
    throw Error(ErrorCode::kUtilizationNotFound,
                "no utilisation lines in place-and-route log");
  }
  return FoldClasses(lines, class_map);
}

ResourceMetrics ParseCountsJson(std::string_view json_text) {
  try {
    return nlohmann::json::parse(json_text).get<ResourceMetrics>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kStatsUnparseable,
                std::string("bad counts document: ") + e.what());
  }
}

}  // namespace cradle::reports

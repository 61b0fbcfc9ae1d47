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

#ifndef CRADLE_TOOL_CONFIG_HPP_
#define CRADLE_TOOL_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cradle/verdict.hpp"
#include "json.hpp"

namespace cradle {

// Cell names containing `pattern` fold into resource class `cls`.
struct ClassRule {
  std::string pattern;
  std::string cls;
  bool operator==(const ClassRule&) const = default;
};

// External tool invocations. Templates are run through /bin/sh with these
// placeholders substituted:
//   synth_cmd        {src} {top} {out}   (must leave stats.json in the cwd)
//   pnr_cmd          {netlist}
//   sim_compile_cmd  {src} {tb} {out}
//   sim_run_cmd      {out}
// {target} may appear in any template.
struct ToolConfig {
  std::string synth_cmd;
  std::string pnr_cmd;
  std::string sim_compile_cmd;
  std::string sim_run_cmd;
  std::string target = "ecp5";
  int timeout_s = 120;
  std::vector<ClassRule> class_map;
  VerdictRules verdict_rules = VerdictRules::Defaults();
  // Parent of per-invocation scratch directories; empty means the system
  // temp directory.
  std::filesystem::path scratch_root;

  // yosys + nextpnr-ecp5 + iverilog/vvp for the ecp5 target.
  static ToolConfig Defaults();
  void Validate() const;
};

// "LUT" -> LUT, "FF"/"DFF" -> FF.
std::vector<ClassRule> DefaultClassMap();

// Replaces every {key} in `tmpl`. Unknown placeholders are left verbatim.
std::string ExpandTemplate(std::string_view tmpl,
                           const std::map<std::string, std::string>& values);

void to_json(nlohmann::json& j, const ToolConfig& c);
// Missing keys keep their Defaults() value.
void from_json(const nlohmann::json& j, ToolConfig& c);

}  // namespace cradle

#endif  // CRADLE_TOOL_CONFIG_HPP_

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

#include "cradle/tool_config.hpp"

#include "cradle/error.hpp"

namespace cradle {

std::vector<ClassRule> DefaultClassMap() {
  return {{"LUT", "LUT"}, {"FF", "FF"}};
}

ToolConfig ToolConfig::Defaults() {
  ToolConfig c;
  c.synth_cmd =
      "yosys -q -p \"read_verilog {src}; synth_{target} -top {top} -json "
      "{out}; tee -q -o stats.json stat -json\"";
  c.pnr_cmd = "nextpnr-{target} --25k --json {netlist} --textcfg pnr.config";
  c.sim_compile_cmd = "iverilog -g2012 -o {out} {src} {tb}";
  c.sim_run_cmd = "vvp -n {out}";
  // nextpnr-ecp5 reports packed LUT4s as TRELLIS_COMB.
  c.class_map = {{"TRELLIS_COMB", "LUT"}};
  for (auto& r : DefaultClassMap()) c.class_map.push_back(std::move(r));
  return c;
}

namespace {

void Require(std::string_view name, const std::string& tmpl,
             std::initializer_list<std::string_view> keys) {
  for (std::string_view k : keys) {
    if (tmpl.find("{" + std::string(k) + "}") == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(name) + " template lacks {" + std::string(k) +
                      "}: " + tmpl);
    }
  }
}

}  // namespace

void ToolConfig::Validate() const {
  Require("synth_cmd", synth_cmd, {"src", "top", "out"});
  Require("pnr_cmd", pnr_cmd, {"netlist"});
  Require("sim_compile_cmd", sim_compile_cmd, {"src", "tb", "out"});
  Require("sim_run_cmd", sim_run_cmd, {"out"});
  if (timeout_s <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "timeout_s must be positive");
  }
}

std::string ExpandTemplate(std::string_view tmpl,
                           const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

void to_json(nlohmann::json& j, const ToolConfig& c) {
  j = {{"synth_cmd", c.synth_cmd},
       {"pnr_cmd", c.pnr_cmd},
       {"sim_compile_cmd", c.sim_compile_cmd},
       {"sim_run_cmd", c.sim_run_cmd},
       {"target", c.target},
       {"timeout_s", c.timeout_s},
       {"verdict", c.verdict_rules},
       {"class_map", nlohmann::json::array()}};
  for (const auto& r : c.class_map) {
    j["class_map"].push_back({{"pattern", r.pattern}, {"class", r.cls}});
  }
  if (!c.scratch_root.empty()) j["scratch_root"] = c.scratch_root.string();
}

void from_json(const nlohmann::json& j, ToolConfig& c) {
  c = ToolConfig::Defaults();
  c.synth_cmd = j.value("synth_cmd", c.synth_cmd);
  c.pnr_cmd = j.value("pnr_cmd", c.pnr_cmd);
  c.sim_compile_cmd = j.value("sim_compile_cmd", c.sim_compile_cmd);
  c.sim_run_cmd = j.value("sim_run_cmd", c.sim_run_cmd);
  c.target = j.value("target", c.target);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  if (j.contains("verdict")) c.verdict_rules = j["verdict"].get<VerdictRules>();
  if (j.contains("class_map")) {
    c.class_map.clear();
    for (const auto& r : j["class_map"]) {
      c.class_map.push_back({r.at("pattern").get<std::string>(),
                             r.at("class").get<std::string>()});
    }
  }
  if (j.contains("scratch_root")) {
    c.scratch_root = j["scratch_root"].get<std::string>();
  }
  c.Validate();
}

}  // namespace cradle

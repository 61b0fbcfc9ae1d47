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

#include "cradle/verdict.hpp"

#include <regex>

#include "cradle/error.hpp"

namespace cradle {

std::string_view StatusName(VerificationStatus s) {
  switch (s) {
    case VerificationStatus::kPass: return "Pass";
    case VerificationStatus::kCompileError: return "CompileError";
    case VerificationStatus::kSimFail: return "SimFail";
    case VerificationStatus::kTimeout: return "Timeout";
    case VerificationStatus::kToolMissing: return "ToolMissing";
  }
  return "Unknown";
}

VerificationStatus ParseStatus(std::string_view name) {
  for (auto s : {VerificationStatus::kPass, VerificationStatus::kCompileError,
                 VerificationStatus::kSimFail, VerificationStatus::kTimeout,
                 VerificationStatus::kToolMissing}) {
    if (StatusName(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown verification status '" + std::string(name) + "'");
}

VerdictRules VerdictRules::Defaults() {
  return VerdictRules{{{"error", R"(\berror\b)"},
                       {"fail", R"(\bfail\b)"},
                       {"mismatch", R"(\bmismatch\b)"}},
                      std::nullopt};
}

std::string LogTail(std::string_view text, int max_lines) {
  if (max_lines <= 0) return {};
  std::size_t end = text.size();
  if (end > 0 && text[end - 1] == '\n') --end;
  std::size_t pos = end;
  int lines = 0;
  while (pos > 0) {
    if (text[pos - 1] == '\n' && ++lines == max_lines) break;
    --pos;
  }
  return std::string(text.substr(pos, end - pos));
}

VerificationVerdict ClassifySimulation(int exit_code, std::string_view output,
                                       const VerdictRules& rules) {
  constexpr auto kFlags =
      std::regex::ECMAScript | std::regex::icase | std::regex::optimize;
  std::vector<std::pair<const VerdictPattern*, std::regex>> fails;
  fails.reserve(rules.fail_patterns.size());
  for (const auto& p : rules.fail_patterns) {
    fails.emplace_back(&p, std::regex(p.regex, kFlags));
  }
  std::optional<std::regex> pass;
  if (rules.pass_pattern) pass.emplace(rules.pass_pattern->regex, kFlags);

  VerificationVerdict v;
  v.log_excerpt = LogTail(output);

  const VerdictPattern* failed_on = nullptr;
  bool pass_seen = false;
  std::size_t start = 0;
  while (start <= output.size() && failed_on == nullptr) {
    std::size_t nl = output.find('\n', start);
    std::size_t stop = nl == std::string_view::npos ? output.size() : nl;
    std::string line(output.substr(start, stop - start));
    for (const auto& [pat, re] : fails) {
      if (std::regex_search(line, re)) {
        failed_on = pat;
        break;
      }
    }
    if (pass && !pass_seen && std::regex_search(line, *pass)) pass_seen = true;
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  if (exit_code != 0) {
    v.status = VerificationStatus::kSimFail;
    v.matched_rule = "exit code " + std::to_string(exit_code);
  } else if (failed_on != nullptr) {
    v.status = VerificationStatus::kSimFail;
    v.matched_rule = failed_on->id;
  } else if (pass && !pass_seen) {
    v.status = VerificationStatus::kSimFail;
    v.matched_rule = "missing pass pattern " + rules.pass_pattern->id;
  } else {
    v.status = VerificationStatus::kPass;
    if (pass) v.matched_rule = rules.pass_pattern->id;
  }
  return v;
}

void to_json(nlohmann::json& j, const VerificationVerdict& v) {
  j = {{"status", StatusName(v.status)}, {"log_excerpt", v.log_excerpt}};
  j["matched_rule"] = v.matched_rule ? nlohmann::json(*v.matched_rule)
                                     : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, VerificationVerdict& v) {
  v.status = ParseStatus(j.at("status").get<std::string>());
  v.log_excerpt = j.value("log_excerpt", "");
  v.matched_rule.reset();
  if (auto it = j.find("matched_rule"); it != j.end() && !it->is_null()) {
    v.matched_rule = it->get<std::string>();
  }
}

void to_json(nlohmann::json& j, const VerdictRules& r) {
  j = nlohmann::json::object();
  auto& fails = j["fail_patterns"] = nlohmann::json::array();
  for (const auto& p : r.fail_patterns) {
    fails.push_back({{"id", p.id}, {"regex", p.regex}});
  }
  if (r.pass_pattern) {
    j["pass_pattern"] = {{"id", r.pass_pattern->id},
                         {"regex", r.pass_pattern->regex}};
  }
}

void from_json(const nlohmann::json& j, VerdictRules& r) {
  r = VerdictRules::Defaults();
  if (auto it = j.find("fail_patterns"); it != j.end()) {
    r.fail_patterns.clear();
    for (const auto& p : *it) {
      r.fail_patterns.push_back(
          {p.at("id").get<std::string>(), p.at("regex").get<std::string>()});
    }
  }
  if (auto it = j.find("pass_pattern"); it != j.end() && !it->is_null()) {
    r.pass_pattern = VerdictPattern{it->at("id").get<std::string>(),
                                    it->at("regex").get<std::string>()};
  }
}

}  // namespace cradle

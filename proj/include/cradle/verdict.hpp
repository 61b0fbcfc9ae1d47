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

#ifndef CRADLE_VERDICT_HPP_
#define CRADLE_VERDICT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cradle {

enum class VerificationStatus { kPass, kCompileError, kSimFail, kTimeout, kToolMissing };

std::string_view StatusName(VerificationStatus s);
VerificationStatus ParseStatus(std::string_view name);

inline constexpr int kLogExcerptLines = 50;

struct VerificationVerdict {
  VerificationStatus status = VerificationStatus::kPass;
  std::string log_excerpt;
  // Id of the pattern that decided the verdict, or "exit code N".
  std::optional<std::string> matched_rule;

  bool passed() const { return status == VerificationStatus::kPass; }
  bool operator==(const VerificationVerdict&) const = default;
};

struct VerdictPattern {
  std::string id;
  std::string regex;  // ECMAScript, matched case-insensitively per line
  bool operator==(const VerdictPattern&) const = default;
};

struct VerdictRules {
  std::vector<VerdictPattern> fail_patterns;
  std::optional<VerdictPattern> pass_pattern;

  // error / fail / mismatch as whole words, no pass pattern.
  static VerdictRules Defaults();
  bool operator==(const VerdictRules&) const = default;
};

// Last `max_lines` lines of `text`.
std::string LogTail(std::string_view text, int max_lines = kLogExcerptLines);

// Pass iff exit code is 0, no line matches a fail pattern, and (when a pass
// pattern is configured) some line matches it. Pure.
VerificationVerdict ClassifySimulation(int exit_code, std::string_view output,
                                       const VerdictRules& rules);

void to_json(nlohmann::json& j, const VerificationVerdict& v);
void from_json(const nlohmann::json& j, VerificationVerdict& v);
void to_json(nlohmann::json& j, const VerdictRules& r);
void from_json(const nlohmann::json& j, VerdictRules& r);

}  // namespace cradle

#endif  // CRADLE_VERDICT_HPP_

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

#ifndef CRADLE_AGENT_HPP_
#define CRADLE_AGENT_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "cradle/design.hpp"
#include "cradle/eda.hpp"
#include "cradle/events.hpp"
#include "cradle/llm.hpp"
#include "cradle/tool_config.hpp"
#include "json.hpp"

// The generator-critic exploration loop: an optimizer (critic) plans, a
// rewriter (generator) executes the plan, simulation gates every candidate and
// place-and-route counts steer the next round.
namespace cradle::agent {

// Line markers of the optimizer's answer format.
inline constexpr std::string_view kStopMarker = "NO_FURTHER_OPTIMIZATION";
inline constexpr std::string_view kContinueMarker = "CONTINUE";
// First lines of the two user prompts; scripted backends match on these.
inline constexpr std::string_view kOptimizerTask = "Task: plan resource optimizations";
inline constexpr std::string_view kRewriterTask = "Task: rewrite the design";

struct OptimizationPlan {
  int id = 0;
  std::vector<std::string> steps;
  std::string rationale;
  bool stop = false;
  std::optional<std::string> focus_module;
};

void to_json(nlohmann::json& j, const OptimizationPlan& p);

// Collects `STEP n:` lines in order; NO_FURTHER_OPTIMIZATION sets stop.
// Throws UnparseablePlan when there are neither steps nor a stop marker.
OptimizationPlan ParsePlan(std::string_view text);

struct LoopConfig {
  int max_iterations = 3;
  int repair_attempts = 2;
  Objective objective;
  bool require_improvement = true;
  // Rough budget (chars / 4) for one optimizer prompt.
  std::size_t prompt_token_budget = 100'000;
  std::string target = "ecp5";
  // Carried into the plan context only.
  std::optional<std::string> focus_module;

  void Validate() const;
};

void to_json(nlohmann::json& j, const LoopConfig& c);
// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, LoopConfig& c);

struct IterationRecord {
  int iteration = 0;
  std::optional<OptimizationPlan> plan;
  std::vector<Variant> candidates;
  std::optional<std::string> failure;  // set when no plan could be obtained
};

struct ExplorationResult {
  Variant reference;
  Variant best;
  std::vector<IterationRecord> iterations;
  std::map<std::string, double, std::less<>> reductions;
  bool stopped_early = false;
  bool cancelled = false;
  std::optional<std::string> aborted;  // error code name when cut short

  std::vector<Variant> Candidates() const;
};

// Everything the optimizer sees in one round.
struct PlanningContext {
  const DesignUnit& design;
  const Variant& reference;
  const Variant& best_so_far;
  std::span<const std::string> guidance;  // all guidance, arrival order
  int iteration = 1;
  const LoopConfig& config;
  std::optional<std::string> prior_outcome;
  bool format_reminder = false;
  // Source text to embed; defaults to best_so_far.source_text.
  std::optional<std::string> source_override;
};

std::size_t EstimateTokens(std::span<const llm::ChatMessage> messages);

// Reasoning-labeled request. Throws PromptTooLarge over the token budget.
llm::ChatRequest BuildOptimizerPrompt(const PlanningContext& ctx);

// Completion-labeled request for one rewrite.
llm::ChatRequest BuildRewriterPrompt(const OptimizationPlan& plan,
                                     std::string_view current_source,
                                     std::optional<std::string_view> feedback,
                                     std::string_view top_module,
                                     std::string_view target);

// Normalized token text of `module`'s header in `source`, if declared.
std::optional<std::string> ModuleHeader(std::string_view source,
                                        std::string_view module);

// Modules of `source` ordered leaves first, excluding `top`.
std::vector<std::string> LeafFirstModules(std::string_view source,
                                          std::string_view top);

// Replaces the bodies of `modules` with a placeholder comment.
std::string ElideModuleBodies(std::string_view source,
                              std::span<const std::string> modules);

// Last verilog (or untagged) fenced block of `reply`, checked to keep the top
// module header. Throws NoCodeBlock or InterfaceChanged.
std::string AcceptRewrite(std::string_view reply, std::string_view top_module,
                          std::string_view expected_header);

// Argmin of the objective over the reference and every verified, measured
// candidate; ties go to the lowest id. Without require_improvement the best
// verified candidate wins even when it does not beat the reference.
Variant SelectBest(const Variant& reference, std::span<const Variant> candidates,
                   const Objective& objective, bool require_improvement = true);

// Per-class reductions of `best` against `reference`; classes whose reduction
// is undefined are left out.
std::map<std::string, double, std::less<>> Reductions(
    const ResourceMetrics& reference, const ResourceMetrics& best);

// Coordination seam: the loop only knows a planner and a rewriter.
class Planner {
 public:
  virtual ~Planner() = default;
  // Returns the plan and the raw reply text.
  virtual std::pair<OptimizationPlan, std::string> Plan(
      const PlanningContext& ctx) = 0;
};

class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual std::string Rewrite(const OptimizationPlan& plan,
                              std::string_view current_source,
                              std::optional<std::string_view> feedback) = 0;
};

class LlmPlanner : public Planner {
 public:
  explicit LlmPlanner(llm::Gateway& gateway) : gateway_(gateway) {}
  // Elides leaf module bodies until the prompt fits the budget.
  std::pair<OptimizationPlan, std::string> Plan(
      const PlanningContext& ctx) override;

 private:
  llm::Gateway& gateway_;
};

class LlmRewriter : public Rewriter {
 public:
  LlmRewriter(llm::Gateway& gateway, std::string top_module,
              std::string expected_header, std::string target)
      : gateway_(gateway),
        top_module_(std::move(top_module)),
        expected_header_(std::move(expected_header)),
        target_(std::move(target)) {}

  std::string Rewrite(const OptimizationPlan& plan,
                      std::string_view current_source,
                      std::optional<std::string_view> feedback) override;

 private:
  llm::Gateway& gateway_;
  std::string top_module_;
  std::string expected_header_;
  std::string target_;
};

struct LoopHooks {
  EventSink* sink = nullptr;
  std::stop_token stop;
  // Guidance present when the loop starts.
  std::vector<std::string> initial_guidance;
  // Guidance that arrived since the last call; polled before each plan.
  std::function<std::vector<std::string>()> take_guidance;
  std::int64_t first_variant_id = 1;
};

// Verifies the reference (and measures it when the design carries no
// reference metrics), then runs up to max_iterations planning rounds.
// Throws RefFailsVerification before any round when the reference does not
// pass; gateway failures propagate after LoopFinished is emitted. Missing
// tools or fixtures end the loop early with `aborted` set.
ExplorationResult RunLoop(const DesignUnit& design, const LoopConfig& cfg,
                          EdaBackend& eda, const ToolConfig& tools,
                          Planner& planner, Rewriter& rewriter,
                          const LoopHooks& hooks);

// Same, with the LLM-backed optimizer and rewriter.
ExplorationResult RunLoop(const DesignUnit& design, const LoopConfig& cfg,
                          EdaBackend& eda, const ToolConfig& tools,
                          llm::Gateway& gateway, const LoopHooks& hooks);

// Sources a candidate is verified and measured with.
std::vector<SourceFile> CandidateSources(std::string_view source_text);

}  // namespace cradle::agent

#endif  // CRADLE_AGENT_HPP_

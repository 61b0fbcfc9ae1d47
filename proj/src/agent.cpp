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

#include "cradle/agent.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cradle/code_blocks.hpp"
#include "cradle/error.hpp"
#include "cradle/verilog_scan.hpp"

namespace cradle::agent {
namespace {

using llm::ChatMessage;
using llm::Role;

std::string Pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string DescribeObjective(const Objective& o) {
  if (o.weights) {
    std::string terms;
    for (const auto& [cls, w] : *o.weights) {
      std::ostringstream t;
      t << w << "*" << cls;
      terms += (terms.empty() ? "" : " + ") + t.str();
    }
    return "minimize the weighted resource sum " + terms;
  }
  return "minimize " + o.primary_class + " count first, then " +
         o.secondary_class + " count";
}

std::string DescribeTarget(std::string_view target) {
  if (target == "ecp5") return "Lattice ECP5 FPGA";
  return std::string(target);
}

std::string DescribeMetrics(const ResourceMetrics& m) {
  std::string out;
  for (const auto& [cls, n] : m.counts()) {
    out += cls + ": " + std::to_string(n) + "\n";
  }
  return out;
}

std::string Fenced(std::string_view code, std::string_view tag) {
  std::string out = "```" + std::string(tag) + "\n" + std::string(code);
  if (out.back() != '\n') out += '\n';
  return out + "```\n";
}

std::string StripDecoration(std::string_view line) {
  std::size_t b = 0;
  while (b < line.size() &&
         std::string_view(" \t*-#>").find(line[b]) != std::string_view::npos) {
    ++b;
  }
  std::string s(line.substr(b));
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '*')) {
    s.pop_back();
  }
  return s;
}

bool IsVerilogTag(std::string_view info) {
  std::string lower(info);
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  return lower.empty() || lower == "verilog" || lower == "systemverilog" ||
         lower == "v" || lower == "sv";
}

const VerdictRules& RulesFor(const DesignUnit& d, const ToolConfig& tools) {
  return d.verdict_rules ? *d.verdict_rules : tools.verdict_rules;
}

}  // namespace

void to_json(nlohmann::json& j, const OptimizationPlan& p) {
  j = {{"id", p.id},
       {"steps", p.steps},
       {"rationale", p.rationale},
       {"stop", p.stop}};
  j["focus_module"] =
      p.focus_module ? nlohmann::json(*p.focus_module) : nlohmann::json(nullptr);
}

OptimizationPlan ParsePlan(std::string_view text) {
  static const std::regex kStep(R"(^STEP\s*(\d+)\s*[:.)]\s*(.*)$)",
                                std::regex::icase);
  static const std::regex kRationale(R"(^RATIONALE\s*:\s*(.*)$)",
                                     std::regex::icase);
  static const std::regex kFocus(R"(^FOCUS\s*:\s*([A-Za-z_][A-Za-z0-9_$]*).*$)",
                                 std::regex::icase);
  OptimizationPlan plan;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string line = StripDecoration(raw);
    std::smatch m;
    if (std::regex_match(line, m, kStep)) {
      std::string step = StripDecoration(m[2].str());
      if (!step.empty()) plan.steps.push_back(std::move(step));
    } else if (std::regex_match(line, m, kRationale)) {
      if (!plan.rationale.empty()) plan.rationale += ' ';
      plan.rationale += m[1].str();
    } else if (std::regex_match(line, m, kFocus)) {
      plan.focus_module = m[1].str();
    }
  }
  plan.stop = text.find(kStopMarker) != std::string_view::npos;
  if (plan.steps.empty() && !plan.stop) {
    throw Error(ErrorCode::kUnparseablePlan,
                "optimizer reply has no STEP lines and no " +
                    std::string(kStopMarker));
  }
  return plan;
}

void LoopConfig::Validate() const {
  if (max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  }
  if (repair_attempts < 0) {
    throw Error(ErrorCode::kInvalidArgument, "repair_attempts must be >= 0");
  }
  objective.Validate();
}

void to_json(nlohmann::json& j, const LoopConfig& c) {
  j = {{"max_iterations", c.max_iterations},
       {"repair_attempts", c.repair_attempts},
       {"objective", c.objective},
       {"require_improvement", c.require_improvement},
       {"prompt_token_budget", c.prompt_token_budget},
       {"target", c.target}};
  j["focus_module"] =
      c.focus_module ? nlohmann::json(*c.focus_module) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, LoopConfig& c) {
  c = LoopConfig{};
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.repair_attempts = j.value("repair_attempts", c.repair_attempts);
  if (j.contains("objective")) c.objective = j["objective"].get<Objective>();
  c.require_improvement = j.value("require_improvement", c.require_improvement);
  c.prompt_token_budget = j.value("prompt_token_budget", c.prompt_token_budget);
  c.target = j.value("target", c.target);
  if (auto it = j.find("focus_module"); it != j.end() && !it->is_null()) {
    c.focus_module = it->get<std::string>();
  }
  c.Validate();
}

std::vector<Variant> ExplorationResult::Candidates() const {
  std::vector<Variant> out;
  for (const auto& it : iterations) {
    out.insert(out.end(), it.candidates.begin(), it.candidates.end());
  }
  return out;
}

std::size_t EstimateTokens(std::span<const ChatMessage> messages) {
  std::size_t chars = 0;
  for (const auto& m : messages) chars += m.content.size();
  return (chars + 3) / 4;
}

llm::ChatRequest BuildOptimizerPrompt(const PlanningContext& ctx) {
  const DesignUnit& d = ctx.design;
  const LoopConfig& cfg = ctx.config;

  std::string system =
      "You are the optimizer agent of a generator-critic pair that reduces "
      "the FPGA resource usage of RTL designs. You review Verilog code and its "
      "measured post-place-and-route resource counts, then write a concrete "
      "optimization plan for a separate rewriter agent. Every change must keep "
      "the design functionally equivalent at the top-module interface, which "
      "a testbench checks.\n"
      "Objective: " + DescribeObjective(cfg.objective) + ".\n"
      "Target device: " + DescribeTarget(cfg.target) + ".";

  std::string user(kOptimizerTask);
  user += "\n\nDesign: " + d.name + " (top module: " + d.top_module + ")\n";
  user += "Iteration: " + std::to_string(ctx.iteration) + " of " +
          std::to_string(cfg.max_iterations) + "\n";
  if (cfg.focus_module) {
    user += "Focus module: " + *cfg.focus_module +
            " (concentrate the plan on this block)\n";
  }
  if (ctx.format_reminder) {
    user += "\nYour previous reply did not follow the answer format. Use the "
            "exact line markers described below.\n";
  }

  const Variant& best = ctx.best_so_far;
  user += "\n## Current best source (";
  user += best.is_reference() ? std::string("reference implementation")
                              : "variant " + std::to_string(best.id);
  user += ")\n";
  user += Fenced(ctx.source_override ? *ctx.source_override : best.source_text,
                 "verilog");
  if (best.metrics) {
    user += "\n## Resource usage of the current best\n" +
            DescribeMetrics(*best.metrics);
  }
  if (!best.is_reference() && ctx.reference.metrics) {
    user += "\n## Resource usage of the reference implementation\n" +
            DescribeMetrics(*ctx.reference.metrics);
  }
  if (ctx.prior_outcome) {
    user += "\n## Outcome of the previous iteration\n" + *ctx.prior_outcome;
    if (user.back() != '\n') user += '\n';
  }
  if (!ctx.guidance.empty()) {
    user += "\n## Designer guidance (apply in this order)\n";
    for (std::size_t i = 0; i < ctx.guidance.size(); ++i) {
      user += std::to_string(i + 1) + ". " + ctx.guidance[i] + "\n";
    }
  }
  user += "\n## Answer format\n"
          "One line per action, numbered: `STEP n: <imperative action>`.\n"
          "One line `RATIONALE: <why this reduces resources>`.\n"
          "Optionally one line `FOCUS: <module name>`.\n"
          "Last line: exactly `" + std::string(kContinueMarker) + "` or `" +
          std::string(kStopMarker) +
          "` (the latter when no further reduction is plausible).\n";

  llm::ChatRequest req;
  req.label = llm::TaskLabel::kReasoning;
  req.messages = {{Role::kSystem, std::move(system)},
                  {Role::kUser, std::move(user)}};
  const std::size_t tokens = EstimateTokens(req.messages);
  if (tokens > cfg.prompt_token_budget) {
    throw Error(ErrorCode::kPromptTooLarge,
                "optimizer prompt needs ~" + std::to_string(tokens) +
                    " tokens, budget is " +
                    std::to_string(cfg.prompt_token_budget));
  }
  return req;
}

llm::ChatRequest BuildRewriterPrompt(const OptimizationPlan& plan,
                                     std::string_view current_source,
                                     std::optional<std::string_view> feedback,
                                     std::string_view top_module,
                                     std::string_view target) {
  std::string system =
      "You are the rewriter agent of a generator-critic pair. You apply an "
      "optimization plan to a Verilog design for the " +
      DescribeTarget(target) +
      ". Keep the top module's name and port list exactly as they are; "
      "internal modules may be added, merged or removed. Answer with the "
      "complete rewritten design as exactly one ```verilog fenced code block.";

  std::string user(kRewriterTask);
  user += "\n\nTop module: " + std::string(top_module) + "\n";
  user += "\n## Optimization plan\n";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    user += "STEP " + std::to_string(i + 1) + ": " + plan.steps[i] + "\n";
  }
  if (!plan.rationale.empty()) user += "RATIONALE: " + plan.rationale + "\n";
  if (plan.focus_module) user += "FOCUS: " + *plan.focus_module + "\n";
  user += "\n## Current source\n" + Fenced(current_source, "verilog");
  if (feedback) {
    user += "\n## Feedback on the previous attempt (fix these problems)\n" +
            Fenced(*feedback, "");
  }

  llm::ChatRequest req;
  req.label = llm::TaskLabel::kCompletion;
  req.messages = {{Role::kSystem, std::move(system)},
                  {Role::kUser, std::move(user)}};
  return req;
}

std::optional<std::string> ModuleHeader(std::string_view source,
                                        std::string_view module) {
  for (const auto& decl : verilog::ScanModules(source)) {
    if (decl.name != module) continue;
    std::string out;
    for (const auto& t : decl.header_tokens) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }
  return std::nullopt;
}

std::vector<std::string> LeafFirstModules(std::string_view source,
                                          std::string_view top) {
  auto decls = verilog::ScanModules(source);
  std::unordered_map<std::string, std::vector<std::string>> children;
  for (const auto& d : decls) {
    auto& kids = children[d.name];
    for (const auto& i : d.instances) kids.push_back(i.module_name);
  }
  // height = longest path to a leaf; leaves first, declaration order on ties.
  std::unordered_map<std::string, int> height;
  std::function<int(const std::string&, int)> h = [&](const std::string& m,
                                                       int guard) -> int {
    if (auto it = height.find(m); it != height.end()) return it->second;
    if (guard > static_cast<int>(decls.size())) return 0;  // recursion
    int best = 0;
    for (const auto& k : children[m]) {
      if (children.contains(k)) best = std::max(best, h(k, guard + 1) + 1);
    }
    return height[m] = best;
  };
  std::vector<std::pair<int, std::size_t>> order;
  for (std::size_t i = 0; i < decls.size(); ++i) {
    if (decls[i].name == top) continue;
    order.emplace_back(h(decls[i].name, 0), i);
  }
  std::stable_sort(order.begin(), order.end());
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& [height_v, idx] : order) {
    if (seen.insert(decls[idx].name).second) out.push_back(decls[idx].name);
  }
  return out;
}

std::string ElideModuleBodies(std::string_view source,
                              std::span<const std::string> modules) {
  auto decls = verilog::ScanModules(source);
  std::string out;
  std::size_t pos = 0;
  for (const auto& d : decls) {
    if (std::find(modules.begin(), modules.end(), d.name) == modules.end()) {
      continue;
    }
    if (d.header_end_offset < pos || d.end_keyword_offset < d.header_end_offset) {
      continue;
    }
    out.append(source.substr(pos, d.header_end_offset - pos));
    out += "\n  // body elided\n";
    pos = d.end_keyword_offset;
  }
  out.append(source.substr(pos));
  return out;
}

std::string AcceptRewrite(std::string_view reply, std::string_view top_module,
                          std::string_view expected_header) {
  const CodeBlock* chosen = nullptr;
  auto blocks = ExtractCodeBlocks(reply);
  for (const auto& b : blocks) {
    if (IsVerilogTag(b.info) && !b.code.empty()) chosen = &b;
  }
  if (chosen == nullptr) {
    throw Error(ErrorCode::kNoCodeBlock,
                "the reply contained no fenced verilog code block; answer with "
                "the complete design in one ```verilog block");
  }
  auto header = ModuleHeader(chosen->code, top_module);
  if (!header) {
    throw Error(ErrorCode::kInterfaceChanged,
                "the rewritten design no longer declares top module '" +
                    std::string(top_module) + "'; keep it with its header: " +
                    std::string(expected_header));
  }
  if (*header != expected_header) {
    throw Error(ErrorCode::kInterfaceChanged,
                "the header of top module '" + std::string(top_module) +
                    "' changed; it must stay exactly: " +
                    std::string(expected_header));
  }
  return chosen->code;
}

Variant SelectBest(const Variant& reference, std::span<const Variant> candidates,
                   const Objective& objective, bool require_improvement) {
  const Variant* best = nullptr;
  for (const auto& c : candidates) {
    if (c.is_reference() || !c.usable()) continue;
    if (best == nullptr) {
      best = &c;
      continue;
    }
    auto kc = ObjectiveValue(*c.metrics, objective);
    auto kb = ObjectiveValue(*best->metrics, objective);
    if (kc < kb || (kc == kb && c.id < best->id)) best = &c;
  }
  if (best == nullptr) return reference;
  if (!require_improvement) return *best;
  if (!reference.metrics) return *best;
  return ObjectiveValue(*best->metrics, objective) <
                 ObjectiveValue(*reference.metrics, objective)
             ? *best
             : reference;
}

std::map<std::string, double, std::less<>> Reductions(
    const ResourceMetrics& reference, const ResourceMetrics& best) {
  std::map<std::string, double, std::less<>> out;
  std::set<std::string> classes;
  for (const auto& [cls, n] : reference.counts()) classes.insert(cls);
  for (const auto& [cls, n] : best.counts()) classes.insert(cls);
  for (const auto& cls : classes) {
    try {
      out[cls] = Reduction(reference, best, cls);
    } catch (const Error&) {
      // undefined: reference had none of this class
    }
  }
  return out;
}

std::pair<OptimizationPlan, std::string> LlmPlanner::Plan(
    const PlanningContext& ctx) {
  llm::ChatRequest req;
  try {
    req = BuildOptimizerPrompt(ctx);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPromptTooLarge) throw;
    // Drop module bodies, deepest leaves first, until the prompt fits.
    const std::string& source = ctx.best_so_far.source_text;
    auto order = LeafFirstModules(source, ctx.design.top_module);
    bool fitted = false;
    for (std::size_t n = 1; n <= order.size() && !fitted; ++n) {
      PlanningContext trimmed = ctx;
      trimmed.source_override = ElideModuleBodies(
          source, std::span<const std::string>(order.data(), n));
      try {
        req = BuildOptimizerPrompt(trimmed);
        fitted = true;
      } catch (const Error& again) {
        if (again.code() != ErrorCode::kPromptTooLarge) throw;
      }
    }
    if (!fitted) throw;
  }
  llm::ChatResponse resp = gateway_.Complete(std::move(req));
  return {ParsePlan(resp.text), resp.text};
}

std::string LlmRewriter::Rewrite(const OptimizationPlan& plan,
                                 std::string_view current_source,
                                 std::optional<std::string_view> feedback) {
  llm::ChatResponse resp = gateway_.Complete(BuildRewriterPrompt(
      plan, current_source, feedback, top_module_, target_));
  return AcceptRewrite(resp.text, top_module_, expected_header_);
}

std::vector<SourceFile> CandidateSources(std::string_view source_text) {
  return {SourceFile{"src/candidate.v", std::string(source_text)}};
}

namespace {

class LoopRun {
 public:
  LoopRun(const DesignUnit& design, const LoopConfig& cfg, EdaBackend& eda,
          const ToolConfig& tools, Planner& planner, Rewriter& rewriter,
          const LoopHooks& hooks)
      : design_(design),
        cfg_(cfg),
        eda_(eda),
        tools_(tools),
        planner_(planner),
        rewriter_(rewriter),
        hooks_(hooks),
        next_id_(std::max<std::int64_t>(1, hooks.first_variant_id)) {}

  ExplorationResult Run();

 private:
  void Emit(EventKind kind, nlohmann::json payload) {
    if (hooks_.sink != nullptr) hooks_.sink->Emit(kind, std::move(payload));
  }
  // `consumed` lists guidance taken for a round that produced no plan.
  void EmitError(const Error& e, int iteration, bool recoverable,
                 const std::vector<std::string>& consumed = {}) {
    nlohmann::json p = {{"code", ErrorCodeName(e.code())},
                        {"message", e.what()},
                        {"iteration", iteration},
                        {"recoverable", recoverable}};
    if (!consumed.empty()) p["guidance_consumed"] = consumed;
    Emit(EventKind::kError, std::move(p));
  }
  bool Cancelled() const { return hooks_.stop.stop_requested(); }

  void VerifyReference();
  // Returns false when the loop has to end (abort or cancel).
  bool RunIteration(int iteration);
  void Finish();
  std::string Summarize(const IterationRecord& rec) const;

  const DesignUnit& design_;
  const LoopConfig& cfg_;
  EdaBackend& eda_;
  const ToolConfig& tools_;
  Planner& planner_;
  Rewriter& rewriter_;
  const LoopHooks& hooks_;

  ExplorationResult result_;
  Variant best_;
  std::int64_t next_id_;
  std::vector<std::string> guidance_;
  std::optional<std::string> prior_outcome_;
  bool format_reminder_ = false;
};

void LoopRun::VerifyReference() {
  Variant& ref = result_.reference;
  ref.id = 0;
  ref.iteration = 0;
  ref.source_text = design_.CombinedSource();
  ref.verdict = eda_.Simulate(design_.source_files, design_.testbench_files,
                              tools_, RulesFor(design_, tools_), hooks_.stop);
  Emit(EventKind::kVerificationResult,
       {{"variant", 0}, {"iteration", 0}, {"verdict", ref.verdict}});
  if (ref.verdict.status == VerificationStatus::kToolMissing) {
    throw Error(ErrorCode::kToolMissing,
                "simulator unavailable: " + ref.verdict.log_excerpt);
  }
  if (!ref.verdict.passed()) {
    Error e(ErrorCode::kRefFailsVerification,
            "reference design " + design_.name + " fails its testbench (" +
                std::string(StatusName(ref.verdict.status)) + ")");
    EmitError(e, 0, false);
    throw e;
  }
  ref.metrics = design_.reference_metrics
                    ? *design_.reference_metrics
                    : Measure(eda_, design_.source_files, design_.top_module,
                              tools_, hooks_.stop);
  Emit(EventKind::kMetricsMeasured,
       {{"variant", 0}, {"iteration", 0}, {"metrics", *ref.metrics}});
}

std::string LoopRun::Summarize(const IterationRecord& rec) const {
  std::string s = "Iteration " + std::to_string(rec.iteration) + ": ";
  if (!rec.plan) return s + "no usable plan (" + rec.failure.value_or("?") + ").";
  s += "plan with " + std::to_string(rec.plan->steps.size()) + " step(s).";
  if (rec.candidates.empty()) s += " No candidate could be extracted.";
  for (const auto& c : rec.candidates) {
    s += "\n- variant " + std::to_string(c.id) + ": " +
         std::string(StatusName(c.verdict.status));
    if (c.verdict.matched_rule) s += " [" + *c.verdict.matched_rule + "]";
    if (c.metrics) {
      s += ", ";
      for (const auto& [cls, n] : c.metrics->counts()) {
        s += cls + " " + std::to_string(n) + " ";
      }
      auto red = Reductions(*result_.reference.metrics, *c.metrics);
      s += "(vs reference:";
      for (const auto& [cls, v] : red) s += " " + cls + " " + Pct(v) + "%";
      s += ")";
    } else if (c.verdict.passed()) {
      s += ", measurement failed";
    }
  }
  s += "\nBest so far: " + (best_.is_reference()
                                ? std::string("reference")
                                : "variant " + std::to_string(best_.id)) +
       ".";
  return s;
}

bool LoopRun::RunIteration(int iteration) {
  IterationRecord rec;
  rec.iteration = iteration;

  std::vector<std::string> fresh;
  if (hooks_.take_guidance) fresh = hooks_.take_guidance();
  guidance_.insert(guidance_.end(), fresh.begin(), fresh.end());

  PlanningContext ctx{design_,  result_.reference, best_, guidance_,
                      iteration, cfg_,             prior_outcome_,
                      format_reminder_, std::nullopt};
  OptimizationPlan plan;
  std::string reply;
  try {
    std::tie(plan, reply) = planner_.Plan(ctx);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnparseablePlan) {
      // The re-ask with a format reminder is the next planning round.
      rec.failure = std::string(ErrorCodeName(e.code()));
      EmitError(e, iteration, true, fresh);
      format_reminder_ = true;
      prior_outcome_ = Summarize(rec);
      result_.iterations.push_back(std::move(rec));
      return true;
    }
    rec.failure = std::string(ErrorCodeName(e.code()));
    result_.iterations.push_back(std::move(rec));
    EmitError(e, iteration, false, fresh);
    if (e.code() == ErrorCode::kPromptTooLarge) {
      result_.aborted = std::string(ErrorCodeName(e.code()));
      return false;
    }
    throw;
  }
  format_reminder_ = false;
  plan.id = iteration;
  rec.plan = plan;
  nlohmann::json pj = plan;
  pj["iteration"] = iteration;
  pj["plan_id"] = plan.id;
  pj["guidance_consumed"] = fresh;
  pj["text"] = reply;
  Emit(EventKind::kPlanCreated, std::move(pj));

  if (plan.stop) {
    result_.stopped_early = true;
    result_.iterations.push_back(std::move(rec));
    return false;
  }

  std::string current = best_.source_text;
  std::optional<std::string> feedback;
  bool keep_going = true;
  for (int attempt = 0; attempt <= cfg_.repair_attempts; ++attempt) {
    if (Cancelled()) {
      result_.cancelled = true;
      keep_going = false;
      break;
    }
    std::string candidate;
    try {
      candidate = rewriter_.Rewrite(plan, current, feedback);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoCodeBlock ||
          e.code() == ErrorCode::kInterfaceChanged) {
        EmitError(e, iteration, true);
        feedback = e.what();
        continue;
      }
      EmitError(e, iteration, false);
      result_.iterations.push_back(std::move(rec));
      throw;
    }

    Variant v;
    v.id = next_id_++;
    v.source_text = candidate;
    v.iteration = iteration;
    v.plan_ref = plan.id;
    Emit(EventKind::kCandidateProduced, {{"variant", v.id},
                                         {"iteration", iteration},
                                         {"plan_id", plan.id},
                                         {"attempt", attempt},
                                         {"source", candidate}});
    auto sources = CandidateSources(candidate);
    try {
      v.verdict = eda_.Simulate(sources, design_.testbench_files, tools_,
                                RulesFor(design_, tools_), hooks_.stop);
    } catch (const Error& e) {
      v.verdict = {VerificationStatus::kToolMissing, e.what(), std::nullopt};
      rec.candidates.push_back(v);
      EmitError(e, iteration, false);
      result_.aborted = std::string(ErrorCodeName(e.code()));
      keep_going = false;
      break;
    }
    Emit(EventKind::kVerificationResult,
         {{"variant", v.id}, {"iteration", iteration}, {"verdict", v.verdict}});
    if (v.verdict.status == VerificationStatus::kToolMissing) {
      rec.candidates.push_back(v);
      result_.aborted = std::string(ErrorCodeName(ErrorCode::kToolMissing));
      keep_going = false;
      break;
    }
    if (!v.verdict.passed()) {
      feedback = v.verdict.log_excerpt.empty()
                     ? std::string(StatusName(v.verdict.status))
                     : v.verdict.log_excerpt;
      current = candidate;
      rec.candidates.push_back(std::move(v));
      continue;
    }
    try {
      v.metrics = Measure(eda_, sources, design_.top_module, tools_, hooks_.stop);
    } catch (const Error& e) {
      rec.candidates.push_back(v);
      if (e.code() == ErrorCode::kToolMissing ||
          e.code() == ErrorCode::kFixtureMiss) {
        EmitError(e, iteration, false);
        result_.aborted = std::string(ErrorCodeName(e.code()));
        keep_going = false;
        break;
      }
      EmitError(e, iteration, true);
      feedback = e.what();
      current = candidate;
      continue;
    }
    Emit(EventKind::kMetricsMeasured,
         {{"variant", v.id}, {"iteration", iteration}, {"metrics", *v.metrics}});
    if (ObjectiveValue(*v.metrics, cfg_.objective) <
        ObjectiveValue(*best_.metrics, cfg_.objective)) {
      best_ = v;
      Emit(EventKind::kBestUpdated,
           {{"variant", v.id},
            {"iteration", iteration},
            {"metrics", *v.metrics},
            {"objective", ObjectiveValue(*v.metrics, cfg_.objective).ToString()},
            {"reductions", Reductions(*result_.reference.metrics, *v.metrics)}});
    }
    rec.candidates.push_back(std::move(v));
    break;
  }
  prior_outcome_ = Summarize(rec);
  result_.iterations.push_back(std::move(rec));
  return keep_going;
}

void LoopRun::Finish() {
  auto candidates = result_.Candidates();
  result_.best = SelectBest(result_.reference, candidates, cfg_.objective,
                            cfg_.require_improvement);
  result_.reductions =
      Reductions(*result_.reference.metrics, *result_.best.metrics);
  nlohmann::json payload = {{"best", result_.best.id},
                            {"best_metrics", *result_.best.metrics},
                            {"reductions", result_.reductions},
                            {"iterations", result_.iterations.size()},
                            {"stopped_early", result_.stopped_early},
                            {"cancelled", result_.cancelled}};
  payload["aborted"] = result_.aborted ? nlohmann::json(*result_.aborted)
                                       : nlohmann::json(nullptr);
  Emit(EventKind::kLoopFinished, std::move(payload));
}

ExplorationResult LoopRun::Run() {
  cfg_.Validate();
  VerifyReference();
  best_ = result_.reference;
  guidance_ = hooks_.initial_guidance;
  result_.best = best_;
  try {
    for (int i = 1; i <= cfg_.max_iterations; ++i) {
      if (Cancelled()) {
        result_.cancelled = true;
        break;
      }
      if (!RunIteration(i)) break;
    }
  } catch (const Error& e) {
    result_.aborted = std::string(ErrorCodeName(e.code()));
    Finish();
    throw;
  }
  Finish();
  return result_;
}

}  // namespace

ExplorationResult RunLoop(const DesignUnit& design, const LoopConfig& cfg,
                          EdaBackend& eda, const ToolConfig& tools,
                          Planner& planner, Rewriter& rewriter,
                          const LoopHooks& hooks) {
  return LoopRun(design, cfg, eda, tools, planner, rewriter, hooks).Run();
}

ExplorationResult RunLoop(const DesignUnit& design, const LoopConfig& cfg,
                          EdaBackend& eda, const ToolConfig& tools,
                          llm::Gateway& gateway, const LoopHooks& hooks) {
  auto header = ModuleHeader(design.CombinedSource(), design.top_module);
  if (!header) {
    throw Error(ErrorCode::kInvalidDesign,
                "top module " + design.top_module + " not found in sources");
  }
  LlmPlanner planner(gateway);
  LlmRewriter rewriter(gateway, design.top_module, *header, cfg.target);
  return RunLoop(design, cfg, eda, tools, planner, rewriter, hooks);
}

}  // namespace cradle::agent

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

#include <gtest/gtest.h>

#include <random>

#include "cradle/agent.hpp"
#include "cradle/error.hpp"
#include "test_util.hpp"

namespace cradle {
namespace {

using agent::LoopConfig;
using agent::LoopHooks;
using testing::FakeEda;
using testing::MarkedCandidate;
using testing::MarkerOutcome;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no cradle::Error thrown";
  return ErrorCode::kIoError;
}

std::string Fence(const std::string& code) { return "```verilog\n" + code + "```\n"; }

constexpr const char* kPlanContinue =
    "STEP 1: drop the unused register\nRATIONALE: fewer flops\nCONTINUE\n";
constexpr const char* kPlanStop = "RATIONALE: nothing left\nNO_FURTHER_OPTIMIZATION\n";

llm::ScriptEntry PlanReply(std::string text) {
  return {std::string(agent::kOptimizerTask), std::move(text)};
}
llm::ScriptEntry RewriteReply(std::string text) {
  return {std::string(agent::kRewriterTask), std::move(text)};
}

struct Harness {
  DesignUnit design = testing::SmallDesign();
  LoopConfig cfg;
  ToolConfig tools;
  FakeEda eda;
  MemorySink sink;
  std::shared_ptr<llm::ScriptedBackend> backend;
  std::unique_ptr<llm::Gateway> gateway;

  explicit Harness(std::vector<llm::ScriptEntry> script) {
    eda.decide = MarkerOutcome;
    backend = std::make_shared<llm::ScriptedBackend>(std::move(script));
    gateway = std::make_unique<llm::Gateway>(backend);
  }

  agent::ExplorationResult Run(LoopHooks hooks = {}) {
    hooks.sink = &sink;
    return agent::RunLoop(design, cfg, eda, tools, *gateway, hooks);
  }

  std::vector<EventKind> Kinds() const {
    std::vector<EventKind> out;
    for (const auto& [k, p] : sink.events()) out.push_back(k);
    return out;
  }
};

// ---- plan parsing ----------------------------------------------------------

TEST(ParsePlan, StepsRationaleFocus) {
  auto p = agent::ParsePlan(
      "Here is my plan.\n**STEP 1:** share the adder\n- STEP 2) remove reg\n"
      "RATIONALE: less logic\nFOCUS: adder16 (leaf)\nCONTINUE\n");
  EXPECT_EQ(p.steps, (std::vector<std::string>{"share the adder", "remove reg"}));
  EXPECT_EQ(p.rationale, "less logic");
  EXPECT_EQ(p.focus_module, "adder16");
  EXPECT_FALSE(p.stop);
}

TEST(ParsePlan, StopMarker) {
  auto p = agent::ParsePlan(kPlanStop);
  EXPECT_TRUE(p.stop);
  EXPECT_TRUE(p.steps.empty());
}

TEST(ParsePlan, Unparseable) {
  EXPECT_EQ(CodeOf([] { agent::ParsePlan("I think it is fine."); }),
            ErrorCode::kUnparseablePlan);
  EXPECT_EQ(CodeOf([] { agent::ParsePlan(""); }), ErrorCode::kUnparseablePlan);
}

// ---- prompts ---------------------------------------------------------------

TEST(Prompts, GuidanceVerbatimAndOrdered) {
  auto d = testing::SmallDesign();
  LoopConfig cfg;
  Variant ref{0, d.CombinedSource(), 0, {}, ResourceMetrics::LutFf(100, 10), {}};
  std::vector<std::string> guidance = {"use a DSP block", "keep `q` registered",
                                       "prefer LUT sharing"};
  agent::PlanningContext ctx{d, ref, ref, guidance, 1, cfg, {}, false, {}};
  auto req = agent::BuildOptimizerPrompt(ctx);
  EXPECT_EQ(req.label, llm::TaskLabel::kReasoning);
  const std::string& user = req.messages.at(1).content;
  EXPECT_EQ(user.rfind(agent::kOptimizerTask, 0), 0u);
  std::size_t prev = 0;
  for (const auto& g : guidance) {
    auto at = user.find(g);
    ASSERT_NE(at, std::string::npos) << g;
    EXPECT_GT(at, prev);
    prev = at;
  }
  EXPECT_NE(user.find("LUT: 100"), std::string::npos);
  EXPECT_NE(user.find(d.CombinedSource()), std::string::npos);
}

TEST(Prompts, RewriterCarriesPlanAndFeedback) {
  agent::OptimizationPlan plan;
  plan.steps = {"merge counters"};
  auto req = agent::BuildRewriterPrompt(plan, "module m; endmodule\n",
                                        std::string_view("Mismatch at cycle 17"),
                                        "m", "ecp5");
  EXPECT_EQ(req.label, llm::TaskLabel::kCompletion);
  const std::string& user = req.messages.at(1).content;
  EXPECT_EQ(user.rfind(agent::kRewriterTask, 0), 0u);
  EXPECT_NE(user.find("STEP 1: merge counters"), std::string::npos);
  EXPECT_NE(user.find("Mismatch at cycle 17"), std::string::npos);
}

TEST(Prompts, TooLarge) {
  auto d = testing::SmallDesign();
  LoopConfig cfg;
  cfg.prompt_token_budget = 10;
  Variant ref{0, d.CombinedSource(), 0, {}, ResourceMetrics::LutFf(1, 1), {}};
  agent::PlanningContext ctx{d, ref, ref, {}, 1, cfg, {}, false, {}};
  EXPECT_EQ(CodeOf([&] { agent::BuildOptimizerPrompt(ctx); }),
            ErrorCode::kPromptTooLarge);
}

class Recorder : public llm::ChatBackend {
 public:
  llm::ChatResponse Complete(const llm::ChatRequest& req) override {
    seen.push_back(req);
    return {kPlanStop, {}, req.model, 0};
  }
  std::vector<llm::ChatRequest> seen;
};

TEST(Prompts, PlannerElidesLeafBodiesToFit) {
  std::string filler(4000, 'x');
  DesignUnit d;
  d.name = "top";
  d.top_module = "top";
  d.source_files = {
      {"src/top.v",
       "module leaf(input a, output b);\n  // " + filler + "\n  assign b = a;\nendmodule\n"
       "module top(input a, output b);\n  leaf u(.a(a), .b(b));\nendmodule\n"}};
  LoopConfig cfg;
  Variant ref{0, d.CombinedSource(), 0, {}, ResourceMetrics::LutFf(1, 1), {}};
  agent::PlanningContext ctx{d, ref, ref, {}, 1, cfg, {}, false, {}};
  cfg.prompt_token_budget = agent::EstimateTokens(agent::BuildOptimizerPrompt(ctx).messages) - 100;

  auto rec = std::make_shared<Recorder>();
  llm::Gateway g(rec);
  agent::LlmPlanner planner(g);
  auto [plan, text] = planner.Plan(ctx);
  EXPECT_TRUE(plan.stop);
  ASSERT_EQ(rec->seen.size(), 1u);
  const std::string& user = rec->seen[0].messages.at(1).content;
  EXPECT_EQ(user.find(filler), std::string::npos);
  EXPECT_NE(user.find("body elided"), std::string::npos);
  EXPECT_NE(user.find("leaf u(.a(a), .b(b));"), std::string::npos);

  cfg.prompt_token_budget = 20;
  EXPECT_EQ(CodeOf([&] { planner.Plan(ctx); }), ErrorCode::kPromptTooLarge);
}

// ---- rewrite acceptance ----------------------------------------------------

TEST(AcceptRewrite, TakesLastVerilogBlock) {
  auto d = testing::SmallDesign();
  auto header = *agent::ModuleHeader(d.CombinedSource(), "counter8");
  auto cand = MarkedCandidate("counter8", 5, 5);
  std::string reply = "draft:\n" + Fence("module counter8(input clk); endmodule\n") +
                      "final:\n" + Fence(cand) + "```text\nnotes\n```\n";
  EXPECT_EQ(agent::AcceptRewrite(reply, "counter8", header) + "\n", cand);
}

TEST(AcceptRewrite, Rejections) {
  auto d = testing::SmallDesign();
  auto header = *agent::ModuleHeader(d.CombinedSource(), "counter8");
  EXPECT_EQ(CodeOf([&] { agent::AcceptRewrite("no code at all", "counter8", header); }),
            ErrorCode::kNoCodeBlock);
  EXPECT_EQ(CodeOf([&] {
              agent::AcceptRewrite(Fence("module other(input clk); endmodule\n"),
                                   "counter8", header);
            }),
            ErrorCode::kInterfaceChanged);
  EXPECT_EQ(CodeOf([&] {
              agent::AcceptRewrite(
                  Fence("module counter8(input clk, output reg [3:0] q); endmodule\n"),
                  "counter8", header);
            }),
            ErrorCode::kInterfaceChanged);
}

// ---- best-variant selection --------------------------------------------------

// Brute force: sort every eligible variant by (objective key, id).
Variant OracleBest(const Variant& ref, const std::vector<Variant>& cands,
                   const Objective& obj, bool require_improvement) {
  std::vector<const Variant*> pool;
  for (const auto& c : cands) {
    if (c.verdict.passed() && c.metrics) pool.push_back(&c);
  }
  if (pool.empty()) return ref;
  std::sort(pool.begin(), pool.end(), [&](const Variant* a, const Variant* b) {
    auto ka = ObjectiveValue(*a->metrics, obj), kb = ObjectiveValue(*b->metrics, obj);
    if (ka != kb) return ka < kb;
    return a->id < b->id;
  });
  if (require_improvement &&
      !(ObjectiveValue(*pool[0]->metrics, obj) < ObjectiveValue(*ref.metrics, obj))) {
    return ref;
  }
  return *pool[0];
}

TEST(SelectBest, MatchesOracle) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> small(0, 6), count(0, 8), status(0, 3);
  for (int round = 0; round < 500; ++round) {
    Objective obj;
    if (round % 2 == 1) obj.weights = {{{"LUT", 1.0}, {"FF", 2.0}}};
    Variant ref{0, "ref", 0, {}, ResourceMetrics::LutFf(small(rng), small(rng)), {}};
    std::vector<Variant> cands;
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
      Variant v;
      v.id = i + 1;
      v.iteration = 1;
      v.verdict.status = status(rng) == 0 ? VerificationStatus::kSimFail
                                          : VerificationStatus::kPass;
      if (v.verdict.passed()) v.metrics = ResourceMetrics::LutFf(small(rng), small(rng));
      cands.push_back(v);
    }
    std::shuffle(cands.begin(), cands.end(), rng);
    for (bool req : {true, false}) {
      auto got = agent::SelectBest(ref, cands, obj, req);
      auto want = OracleBest(ref, cands, obj, req);
      ASSERT_EQ(got.id, want.id) << "round " << round;
    }
  }
}

TEST(SelectBest, NeverPicksFailingVariant) {
  Variant ref{0, "ref", 0, {}, ResourceMetrics::LutFf(10, 10), {}};
  Variant bad{1, "c", 1, {VerificationStatus::kSimFail, "x", {}}, std::nullopt, 1};
  EXPECT_EQ(agent::SelectBest(ref, std::vector<Variant>{bad}, {}).id, 0);
}

// ---- the loop ----------------------------------------------------------------

TEST(RunLoop, ImprovesThenStops) {
  Harness h({PlanReply(kPlanContinue),
             RewriteReply("done:\n" + Fence(MarkedCandidate("counter8", 52, 6))),
             PlanReply(kPlanStop)});
  auto r = h.Run();
  EXPECT_EQ(r.best.id, 1);
  EXPECT_EQ(r.best.metrics, ResourceMetrics::LutFf(52, 6));
  EXPECT_DOUBLE_EQ(r.reductions.at("LUT"), 48.0);
  EXPECT_DOUBLE_EQ(r.reductions.at("FF"), 40.0);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.iterations.size(), 2u);
  using K = EventKind;
  EXPECT_EQ(h.Kinds(),
            (std::vector<K>{K::kVerificationResult, K::kMetricsMeasured, K::kPlanCreated,
                            K::kCandidateProduced, K::kVerificationResult,
                            K::kMetricsMeasured, K::kBestUpdated, K::kPlanCreated,
                            K::kLoopFinished}));
  auto last = h.sink.events().back().second;
  EXPECT_EQ(last["best"], 1);
  EXPECT_TRUE(last["aborted"].is_null());
}

TEST(RunLoop, IterationBudget) {
  std::vector<llm::ScriptEntry> script;
  for (int i = 0; i < 5; ++i) {
    script.push_back(PlanReply(kPlanContinue));
    script.push_back(RewriteReply(Fence(MarkedCandidate("counter8", 90 - i, 9))));
  }
  Harness h(script);
  auto r = h.Run();
  EXPECT_EQ(r.iterations.size(), 3u);
  EXPECT_EQ(h.gateway->calls(llm::TaskLabel::kReasoning), 3);
  EXPECT_EQ(h.gateway->calls(llm::TaskLabel::kCompletion), 3);
  EXPECT_EQ(r.best.id, 3);
  EXPECT_FALSE(r.stopped_early);
}

TEST(RunLoop, RepairsAreBounded) {
  std::vector<llm::ScriptEntry> script = {PlanReply(kPlanContinue)};
  for (int i = 0; i < 3; ++i) {
    script.push_back(RewriteReply(
        Fence(MarkedCandidate("counter8", 1, 1, VerificationStatus::kSimFail))));
  }
  script.push_back(PlanReply(kPlanStop));
  Harness h(script);
  auto r = h.Run();
  ASSERT_EQ(r.iterations.size(), 2u);
  EXPECT_EQ(r.iterations[0].candidates.size(), 3u);
  EXPECT_EQ(r.best.id, 0);
  EXPECT_EQ(h.eda.synth_calls, 1);  // the reference only
}

TEST(RunLoop, RepairFeedbackAndSuccess) {
  Harness h({PlanReply(kPlanContinue), RewriteReply("I refuse to use fences"),
             RewriteReply(Fence(MarkedCandidate("counter8", 70, 8,
                                                VerificationStatus::kSimFail))),
             RewriteReply(Fence(MarkedCandidate("counter8", 80, 9))),
             PlanReply(kPlanStop)});
  h.cfg.repair_attempts = 2;
  auto r = h.Run();
  // The fence-less reply burns one attempt without producing a variant.
  ASSERT_EQ(r.iterations[0].candidates.size(), 2u);
  EXPECT_EQ(r.best.id, 2);
  EXPECT_EQ(r.best.metrics, ResourceMetrics::LutFf(80, 9));
  int errors = 0;
  for (const auto& [k, p] : h.sink.events()) {
    if (k == EventKind::kError) {
      ++errors;
      EXPECT_EQ(p["code"], "NoCodeBlock");
      EXPECT_TRUE(p["recoverable"].get<bool>());
    }
  }
  EXPECT_EQ(errors, 1);
}

TEST(RunLoop, NoStrictImprovementKeepsReference) {
  Harness h({PlanReply(kPlanContinue),
             RewriteReply(Fence(MarkedCandidate("counter8", 100, 10))),
             PlanReply(kPlanStop)});
  auto r = h.Run();
  EXPECT_EQ(r.best.id, 0);
  EXPECT_TRUE(r.reductions.empty() || r.reductions.at("LUT") == 0.0);
  for (auto k : h.Kinds()) EXPECT_NE(k, EventKind::kBestUpdated);
}

TEST(RunLoop, ReferenceMustPass) {
  Harness h({PlanReply(kPlanContinue)});
  h.eda.decide = [](std::string_view) {
    return FakeEda::Outcome{testing::Verdict(VerificationStatus::kSimFail), std::nullopt};
  };
  EXPECT_EQ(CodeOf([&] { h.Run(); }), ErrorCode::kRefFailsVerification);
  EXPECT_EQ(h.gateway->calls(llm::TaskLabel::kReasoning), 0);
  EXPECT_EQ(h.sink.events().back().first, EventKind::kError);
}

TEST(RunLoop, UnparseablePlanUsesAnIteration) {
  Harness h({PlanReply("looks fine to me"), PlanReply(kPlanStop)});
  auto r = h.Run();
  ASSERT_EQ(r.iterations.size(), 2u);
  EXPECT_TRUE(r.iterations[0].failure);
  EXPECT_EQ(h.gateway->calls(llm::TaskLabel::kReasoning), 2);
  EXPECT_EQ(r.best.id, 0);
}

TEST(RunLoop, CancelledBeforeFirstRound) {
  Harness h({PlanReply(kPlanContinue)});
  std::stop_source stop;
  stop.request_stop();
  LoopHooks hooks;
  hooks.stop = stop.get_token();
  auto r = h.Run(hooks);
  EXPECT_TRUE(r.cancelled);
  EXPECT_EQ(r.best.id, 0);
  EXPECT_EQ(h.gateway->calls(llm::TaskLabel::kReasoning), 0);
  EXPECT_EQ(h.sink.events().back().first, EventKind::kLoopFinished);
}

TEST(RunLoop, GatewayFailureStillFinishes) {
  Harness h({PlanReply(kPlanContinue)});
  EXPECT_EQ(CodeOf([&] { h.Run(); }), ErrorCode::kScriptExhausted);
  auto events = h.sink.events();
  ASSERT_GE(events.size(), 2u);
  EXPECT_EQ(events[events.size() - 2].first, EventKind::kError);
  EXPECT_EQ(events.back().first, EventKind::kLoopFinished);
  EXPECT_EQ(events.back().second["aborted"], "ScriptExhausted");
}

TEST(RunLoop, GuidanceArrivingMidRunReachesNextPrompt) {
  auto rec = std::make_shared<llm::ScriptedBackend>(std::vector<llm::ScriptEntry>{
      PlanReply(kPlanContinue),
      RewriteReply(Fence(MarkedCandidate("counter8", 60, 8))), PlanReply(kPlanStop)});
  struct Spy : llm::ChatBackend {
    std::shared_ptr<llm::ChatBackend> inner;
    std::vector<std::string> prompts;
    llm::ChatResponse Complete(const llm::ChatRequest& r) override {
      prompts.push_back(std::string(r.LastUserMessage()));
      return inner->Complete(r);
    }
  };
  auto spy = std::make_shared<Spy>();
  spy->inner = rec;
  llm::Gateway g(spy);
  FakeEda eda;
  eda.decide = MarkerOutcome;
  auto d = testing::SmallDesign();
  LoopConfig cfg;
  ToolConfig tools;
  int polls = 0;
  LoopHooks hooks;
  hooks.initial_guidance = {"first hint"};
  hooks.take_guidance = [&] {
    return ++polls == 2 ? std::vector<std::string>{"second hint"}
                        : std::vector<std::string>{};
  };
  agent::RunLoop(d, cfg, eda, tools, g, hooks);
  ASSERT_EQ(spy->prompts.size(), 3u);
  EXPECT_NE(spy->prompts[0].find("1. first hint"), std::string::npos);
  EXPECT_EQ(spy->prompts[0].find("second hint"), std::string::npos);
  EXPECT_NE(spy->prompts[2].find("1. first hint"), std::string::npos);
  EXPECT_NE(spy->prompts[2].find("2. second hint"), std::string::npos);
  EXPECT_NE(spy->prompts[2].find("variant 1"), std::string::npos);
}

TEST(LoopConfig, JsonRoundTrip) {
  LoopConfig c;
  c.max_iterations = 2;
  c.focus_module = "adder";
  c.objective.weights = {{{"LUT", 1.0}}};
  nlohmann::json j = c;
  auto back = j.get<LoopConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(CodeOf([] { nlohmann::json{{"max_iterations", 0}}.get<LoopConfig>(); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace cradle

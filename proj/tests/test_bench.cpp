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

#include "cradle/backends.hpp"
#include "cradle/bench.hpp"
#include "test_util.hpp"

namespace cradle::bench {
namespace {

namespace fs = std::filesystem;
using testing::FakeEda;
using testing::MarkedCandidate;
using testing::MarkerOutcome;
using testing::TempDir;

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

// A suite whose designs all share SmallDesign's shape; each design's script
// rewrites it once to `lut`/`ff` and then stops.
struct FakeSuite {
  Suite suite;
  std::map<std::string, std::vector<llm::ScriptEntry>> scripts;
  RunOptions opts;

  void Add(const std::string& name, std::int64_t lut, std::int64_t ff,
           VerificationStatus status = VerificationStatus::kPass) {
    suite.designs.push_back(testing::SmallDesign(name));
    scripts[name] = {
        {std::string(agent::kOptimizerTask), "STEP 1: shrink\nCONTINUE\n"},
        {std::string(agent::kRewriterTask), Fence(MarkedCandidate(name, lut, ff, status))},
        {std::string(agent::kOptimizerTask), "NO_FURTHER_OPTIMIZATION\n"}};
  }

  SuiteResult Run(int parallelism = 1) {
    std::sort(suite.designs.begin(), suite.designs.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    auto eda = std::make_shared<FakeEda>();
    eda->decide = MarkerOutcome;
    opts.eda = eda;
    opts.loop.repair_attempts = 0;
    opts.parallelism = parallelism;
    opts.chat_factory = [this](const std::string& d) {
      return std::make_shared<llm::ScriptedBackend>(scripts.at(d));
    };
    return RunSuite(suite, opts);
  }
};

TEST(Discover, SortedAndSkipped) {
  TempDir t;
  for (std::string n : {"zeta", "alpha", "mid"}) WriteDesign(t.path(), testing::SmallDesign(n));
  auto s = DiscoverSuite(t.path() / "designs");
  ASSERT_EQ(s.designs.size(), 3u);
  EXPECT_EQ(s.designs[0].name, "alpha");
  EXPECT_EQ(s.designs[2].name, "zeta");
  EXPECT_TRUE(s.skipped.empty());

  fs::remove_all(t.path() / "designs" / "mid" / "tb");
  s = DiscoverSuite(t.path() / "designs");
  EXPECT_EQ(s.designs.size(), 2u);
  ASSERT_EQ(s.skipped.size(), 1u);
  EXPECT_EQ(s.skipped[0].rfind("mid:", 0), 0u);
}

TEST(Discover, EmptySuite) {
  TempDir t;
  fs::create_directories(t.path() / "designs");
  EXPECT_EQ(CodeOf([&] { DiscoverSuite(t.path() / "designs"); }), ErrorCode::kEmptySuite);
  EXPECT_EQ(CodeOf([&] { DiscoverSuite(t.path() / "absent"); }), ErrorCode::kEmptySuite);
}

TEST(RunSuite, TwoDesigns) {
  FakeSuite f;
  f.Add("good", 52, 6);
  f.Add("flat", 100, 10);
  auto r = f.Run();
  ASSERT_EQ(r.per_design.size(), 2u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_TRUE(r.per_design.at("good").improved);
  EXPECT_FALSE(r.per_design.at("flat").improved);
  EXPECT_EQ(r.per_design.at("good").verdict_trail, std::vector<std::string>{"v1 i1 Pass"});
  auto stats = Aggregate(r);
  EXPECT_EQ(stats.improved_count, 1);
  EXPECT_EQ(stats.total_count, 2);
  EXPECT_DOUBLE_EQ(*stats.mean_reduction.at("LUT"), 24.0);
  EXPECT_DOUBLE_EQ(*stats.mean_reduction.at("FF"), 20.0);
}

TEST(RunSuite, FailingReferencesGoToFailures) {
  FakeSuite f;
  f.Add("a", 1, 1);
  f.Add("b", 1, 1);
  auto eda = std::make_shared<FakeEda>();
  eda->decide = [](std::string_view) {
    return FakeEda::Outcome{testing::Verdict(VerificationStatus::kSimFail), std::nullopt};
  };
  f.opts.chat_factory = [&](const std::string& d) {
    return std::make_shared<llm::ScriptedBackend>(f.scripts.at(d));
  };
  f.opts.eda = eda;
  auto r = RunSuite(f.suite, f.opts);
  EXPECT_TRUE(r.per_design.empty());
  ASSERT_EQ(r.failures.size(), 2u);
  EXPECT_EQ(r.failures.at("a").rfind("RefFailsVerification", 0), 0u);
  EXPECT_EQ(ToCsv(r),
            "design,ref_lut,best_lut,lut_reduction_pct,ref_ff,best_ff,ff_reduction_pct,"
            "improved\n");
  EXPECT_EQ(Aggregate(r).total_count, 0);
}

TEST(RunSuite, GatewayFailureKeepsBestSoFar) {
  FakeSuite f;
  f.Add("a", 1, 1);
  f.scripts["a"].clear();
  auto r = f.Run();
  ASSERT_EQ(r.per_design.size(), 1u);
  EXPECT_EQ(r.per_design.at("a").aborted, "ScriptExhausted");
  EXPECT_FALSE(r.per_design.at("a").improved);
}

TEST(RunSuite, ParallelMatchesSerial) {
  FakeSuite f;
  for (int i = 0; i < 12; ++i) {
    f.Add("d" + std::to_string(i), 40 + i, 5 + i % 7,
          i % 5 == 0 ? VerificationStatus::kSimFail : VerificationStatus::kPass);
  }
  auto serial = f.Run(1);
  auto parallel = f.Run(4);
  EXPECT_EQ(ToCsv(serial), ToCsv(parallel));
  EXPECT_EQ(serial.failures, parallel.failures);
  EXPECT_FALSE(serial.per_design.at("d0").improved);
}

TEST(Csv, ReplayFixtureRow) {
  auto spec = backends::ParseBackend("replay:" + testing::Fixture("replay/counter8").string());
  RunOptions opts;
  opts.eda = backends::MakeEda(spec);
  opts.chat_factory = backends::MakeChatFactory(spec);
  auto suite = DiscoverSuite(testing::Fixture("workspace/designs"));
  auto a = RunSuite(suite, opts);
  auto b = RunSuite(suite, opts);
  const std::string csv = ToCsv(a);
  EXPECT_EQ(csv,
            "design,ref_lut,best_lut,lut_reduction_pct,ref_ff,best_ff,ff_reduction_pct,"
            "improved\ncounter8,100,52,48.0,10,6,40.0,true\n");
  EXPECT_EQ(csv, ToCsv(b));
}

TEST(Csv, UndefinedReductionIsEmpty) {
  SuiteResult r;
  DesignOutcome o;
  o.ref = ResourceMetrics::LutFf(10, 0);
  o.best = ResourceMetrics::LutFf(5, 2);
  o.improved = true;
  o.reductions = {{"LUT", 50.0}};
  r.per_design["x"] = o;
  EXPECT_EQ(ToCsv(r).substr(ToCsv(r).find('\n') + 1), "x,10,5,50.0,0,2,,true\n");
}

TEST(Json, RoundTrip) {
  FakeSuite f;
  f.Add("good", 52, 6);
  f.Add("odd", 77, 3);
  f.Add("flat", 100, 10);
  auto r = f.Run();
  r.skipped = {"broken: MissingTestbench"};
  // Percentages persist to one decimal, so compare after rounding.
  for (auto& [n, o] : r.per_design) {
    for (auto& [c, v] : o.reductions) v = RoundPct(v);
  }
  auto j = ToJson(r);
  auto back = SuiteFromJson(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back, r);
  EXPECT_EQ(j["aggregate"]["improved_count"], 2);
  EXPECT_EQ(j["per_design"]["good"]["reductions"]["LUT"], 48.0);
}

TEST(Aggregate, SpecExamples) {
  auto outcome = [](double lut) {
    DesignOutcome o;
    o.ref = ResourceMetrics::LutFf(100, 10);
    o.best = ResourceMetrics::LutFf(static_cast<std::int64_t>(100 - lut), 10);
    o.improved = lut > 0;
    o.reductions = {{"LUT", lut}, {"FF", 0.0}};
    return o;
  };
  SuiteResult r;
  r.per_design["a"] = outcome(60);
  r.per_design["b"] = outcome(36);
  EXPECT_DOUBLE_EQ(*Aggregate(r).mean_reduction.at("LUT"), 48.0);

  SuiteResult worse;
  worse.per_design["w"] = outcome(-20);
  auto s = Aggregate(worse);
  EXPECT_DOUBLE_EQ(*s.mean_reduction.at("LUT"), -20.0);
  EXPECT_DOUBLE_EQ(*s.mean_reduction_clamped.at("LUT"), 0.0);
  EXPECT_EQ(s.improved_count, 0);

  SuiteResult undefined;
  DesignOutcome u;
  u.ref = ResourceMetrics::LutFf(0, 0);
  u.best = ResourceMetrics::LutFf(3, 0);
  undefined.per_design["u"] = u;
  EXPECT_FALSE(Aggregate(undefined).mean_reduction.at("LUT"));
}

TEST(Format, Percent) {
  EXPECT_EQ(FormatPct(48.0), "48.0");
  EXPECT_EQ(FormatPct(-0.04), "0.0");
  EXPECT_EQ(FormatPct(33.333), "33.3");
  EXPECT_EQ(RoundPct(12.25), 12.3);
}

TEST(Output, UnwritablePath) {
  EXPECT_EQ(CodeOf([] { WriteOutput("/proc/cradle/nope.csv", "x"); }), ErrorCode::kIoError);
}

}  // namespace
}  // namespace cradle::bench

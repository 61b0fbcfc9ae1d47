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

#include "cradle/design.hpp"
#include "cradle/error.hpp"
#include "test_util.hpp"

namespace cradle {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::WriteText;

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

TEST(ResourceMetrics, AlwaysHasLutAndFf) {
  ResourceMetrics m;
  EXPECT_EQ(m.counts().size(), 2u);
  EXPECT_EQ(m.count(kLut), 0);
  EXPECT_EQ(m.count(kFf), 0);
  ResourceMetrics only({{"BRAM", 3}});
  EXPECT_EQ(only.count(kLut), 0);
  EXPECT_TRUE(only.counts().contains("FF"));
  EXPECT_EQ(only.count("BRAM"), 3);
}

TEST(ResourceMetrics, RejectsNegativeCounts) {
  EXPECT_EQ(CodeOf([] { ResourceMetrics({{"LUT", -1}}); }), ErrorCode::kInvalidArgument);
  ResourceMetrics m;
  EXPECT_EQ(CodeOf([&] { m.set("FF", -2); }), ErrorCode::kInvalidArgument);
}

TEST(ResourceMetrics, JsonRoundTrip) {
  ResourceMetrics m({{"LUT", 7}, {"FF", 2}, {"CARRY", 4}});
  nlohmann::json j = m;
  EXPECT_EQ(j.get<ResourceMetrics>(), m);
  EXPECT_EQ(nlohmann::json::parse(R"({"LUT":3})").get<ResourceMetrics>(),
            ResourceMetrics::LutFf(3, 0));
}

TEST(Objective, LexicographicKey) {
  auto k = ObjectiveValue(ResourceMetrics::LutFf(10, 4), Objective{});
  EXPECT_EQ(k.primary, 10);
  EXPECT_EQ(k.secondary, 4);
  EXPECT_FALSE(k.weighted);
  auto z = ObjectiveValue(ResourceMetrics({{"FF", 4}}), Objective{});
  EXPECT_EQ(z.primary, 0);
  EXPECT_EQ(z.secondary, 4);
}

TEST(Objective, WeightedKey) {
  Objective o;
  o.weights = {{{"LUT", 1.0}, {"FF", 2.0}}};
  auto k = ObjectiveValue(ResourceMetrics::LutFf(10, 4), o);
  ASSERT_TRUE(k.weighted);
  EXPECT_DOUBLE_EQ(*k.weighted, 18.0);
}

TEST(Objective, ValidateRejectsBrokenInvariants) {
  Objective same;
  same.secondary_class = "LUT";
  EXPECT_EQ(CodeOf([&] { same.Validate(); }), ErrorCode::kInvalidArgument);
  Objective zero;
  zero.weights = {{{"LUT", 0.0}}};
  EXPECT_EQ(CodeOf([&] { zero.Validate(); }), ErrorCode::kInvalidArgument);
  Objective negative;
  negative.weights = {{{"LUT", 1.0}, {"FF", -1.0}}};
  EXPECT_EQ(CodeOf([&] { negative.Validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Objective, TotalOrderProperty) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(0, 6);
  std::vector<ResourceMetrics> ms;
  for (int i = 0; i < 60; ++i) ms.push_back(ResourceMetrics::LutFf(d(rng), d(rng)));
  Objective o;
  for (const auto& a : ms) {
    for (const auto& b : ms) {
      auto ka = ObjectiveValue(a, o), kb = ObjectiveValue(b, o);
      int relations = (ka < kb) + (kb < ka) + (ka == kb);
      ASSERT_EQ(relations, 1);
      // Oracle: tuple comparison.
      auto ta = std::make_pair(a.count(kLut), a.count(kFf));
      auto tb = std::make_pair(b.count(kLut), b.count(kFf));
      ASSERT_EQ(ka < kb, ta < tb);
      for (const auto& c : ms) {
        auto kc = ObjectiveValue(c, o);
        if (ka < kb && kb < kc) ASSERT_TRUE(ka < kc);
      }
    }
  }
}

TEST(Reduction, Examples) {
  auto r = ResourceMetrics::LutFf(100, 10);
  EXPECT_DOUBLE_EQ(Reduction(r, ResourceMetrics::LutFf(52, 10), kLut), 48.0);
  EXPECT_DOUBLE_EQ(Reduction(r, ResourceMetrics::LutFf(52, 10), kFf), 0.0);
  EXPECT_DOUBLE_EQ(Reduction(ResourceMetrics::LutFf(50, 0),
                             ResourceMetrics::LutFf(60, 0), kLut),
                   -20.0);
  EXPECT_DOUBLE_EQ(Reduction(ResourceMetrics(), ResourceMetrics(), kLut), 0.0);
  EXPECT_EQ(CodeOf([] {
              Reduction(ResourceMetrics::LutFf(0, 1), ResourceMetrics::LutFf(1, 1),
                        kLut);
            }),
            ErrorCode::kUndefinedReduction);
}

TEST(Reduction, SelfIsZero) {
  ResourceMetrics m({{"LUT", 9}, {"FF", 0}, {"DSP", 2}});
  for (const auto& [cls, n] : m.counts()) EXPECT_EQ(Reduction(m, m, cls), 0.0);
}

TEST(Variant, MetricsRequirePass) {
  Variant v;
  v.id = 3;
  v.iteration = 1;
  v.verdict.status = VerificationStatus::kSimFail;
  v.metrics = ResourceMetrics::LutFf(1, 1);
  EXPECT_EQ(CodeOf([&] { v.CheckInvariants(); }), ErrorCode::kInvalidArgument);
  v.verdict.status = VerificationStatus::kPass;
  EXPECT_NO_THROW(v.CheckInvariants());
  EXPECT_TRUE(v.usable());
}

// ---- hierarchy -----------------------------------------------------------

std::vector<std::string_view> Views(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

TEST(Hierarchy, TwoModuleChain) {
  std::vector<std::string> src = {"module a; b u0(); endmodule module b; endmodule"};
  auto h = ExtractHierarchy(Views(src));
  EXPECT_EQ(h.module_name, "a");
  ASSERT_EQ(h.instances.size(), 1u);
  EXPECT_EQ(h.instances[0].instance_name, "u0");
  EXPECT_EQ(h.instances[0].child.module_name, "b");
}

TEST(Hierarchy, FftShape) {
  std::vector<std::string> src = {
      "module fft_top(input clk);\n"
      "  butterfly #(.W(16)) bf0 (.clk(clk));\n"
      "  butterfly bf1 (.clk(clk));\n"
      "endmodule\n",
      "// butterfly unit\nmodule butterfly #(parameter W = 8) (input clk);\n"
      "  adder add0 (.a(1'b0));\n  mult mul0 (.a(1'b0));\n"
      "  /* mult ignored (); */\n  initial $display(\"adder fake ();\");\n"
      "endmodule\n"
      "module adder(input a); endmodule\nmodule mult(input a); endmodule\n"};
  auto h = ExtractHierarchy(Views(src));
  EXPECT_EQ(h.module_name, "fft_top");
  ASSERT_EQ(h.instances.size(), 2u);
  for (const auto& inst : h.instances) {
    EXPECT_EQ(inst.child.module_name, "butterfly");
    ASSERT_EQ(inst.child.instances.size(), 2u);
    EXPECT_EQ(inst.child.instances[0].child.module_name, "adder");
    EXPECT_EQ(inst.child.instances[1].child.module_name, "mult");
  }
  EXPECT_EQ(h.Depth(), 3u);
  EXPECT_EQ(h.NodeCount(), 7u);
  EXPECT_EQ(h.NodeCount(), h.EdgeCount() + 1);
}

TEST(Hierarchy, Errors) {
  std::vector<std::string> self = {"module a; a u0(); endmodule"};
  EXPECT_EQ(CodeOf([&] { ExtractHierarchy(Views(self)); }), ErrorCode::kCyclicHierarchy);
  std::vector<std::string> loop = {
      "module t; a x(); endmodule module a; b y(); endmodule module b; a z(); endmodule"};
  EXPECT_EQ(CodeOf([&] { ExtractHierarchy(Views(loop), "t"); }),
            ErrorCode::kCyclicHierarchy);
  std::vector<std::string> none = {"// nothing here\nwire x;"};
  EXPECT_EQ(CodeOf([&] { ExtractHierarchy(Views(none)); }), ErrorCode::kParseGaveNothing);
  std::vector<std::string> two = {"module a; endmodule module b; endmodule"};
  EXPECT_EQ(CodeOf([&] { ExtractHierarchy(Views(two)); }), ErrorCode::kAmbiguousTop);
}

TEST(Hierarchy, UndeclaredPrimitivesAreDropped) {
  std::vector<std::string> src = {
      "module top(input clk); SB_LUT4 l0 (.I0(clk)); sub s0(); endmodule\n"
      "module sub; endmodule"};
  auto h = ExtractHierarchy(Views(src));
  ASSERT_EQ(h.instances.size(), 1u);
  EXPECT_EQ(h.instances[0].child.module_name, "sub");
}

// Random DAGs rendered as Verilog; the expected tree is built straight from
// the generator's adjacency lists.
struct RandomDag {
  int n = 0;
  std::vector<std::vector<std::pair<std::string, int>>> children;  // (inst, module)
};

HierarchyNode Expected(const RandomDag& g, int m) {
  HierarchyNode node{"m" + std::to_string(m), {}};
  for (const auto& [inst, child] : g.children[m]) {
    node.instances.push_back({inst, Expected(g, child)});
  }
  return node;
}

TEST(Hierarchy, MatchesGeneratorOracle) {
  std::mt19937 rng(1234);
  for (int round = 0; round < 200; ++round) {
    RandomDag g;
    g.n = 2 + static_cast<int>(rng() % 6);
    g.children.resize(g.n);
    std::vector<bool> instantiated(g.n, false);
    for (int m = 0; m < g.n; ++m) {
      // Edges only go to higher indices, so the graph is acyclic.
      for (int c = m + 1; c < g.n; ++c) {
        int copies = static_cast<int>(rng() % 3) == 0 ? static_cast<int>(rng() % 3) : 0;
        for (int k = 0; k < copies; ++k) {
          g.children[m].push_back({"u" + std::to_string(c) + "_" + std::to_string(k), c});
          instantiated[c] = true;
        }
      }
    }
    // Make m0 the unique root.
    for (int c = 1; c < g.n; ++c) {
      if (!instantiated[c]) g.children[0].push_back({"r" + std::to_string(c), c});
    }
    std::vector<std::string> files;
    for (int m = g.n - 1; m >= 0; --m) {
      std::string s = "// module m" + std::to_string(m) + "\nmodule m" + std::to_string(m) +
                      " (input wire clk);\n";
      for (const auto& [inst, c] : g.children[m]) {
        if (rng() % 2) {
          s += "  m" + std::to_string(c) + " #(.P(" + std::to_string(c) + ")) " + inst +
               " (.clk(clk));\n";
        } else {
          s += "  m" + std::to_string(c) + " " + inst + " (clk);\n";
        }
      }
      s += "endmodule\n";
      files.push_back(s);
    }
    auto h = ExtractHierarchy(Views(files));
    HierarchyNode want = Expected(g, 0);
    ASSERT_EQ(h, want) << "round " << round;
    ASSERT_EQ(h.NodeCount(), h.EdgeCount() + 1);
  }
}

// ---- loading -------------------------------------------------------------

TEST(LoadDesign, Counter8Fixture) {
  auto d = LoadDesign(testing::Fixture("workspace"), "counter8");
  EXPECT_EQ(d.name, "counter8");
  EXPECT_EQ(d.top_module, "counter8");
  ASSERT_EQ(d.source_files.size(), 1u);
  EXPECT_EQ(d.source_files[0].path, "src/counter8.v");
  ASSERT_EQ(d.testbench_files.size(), 1u);
  EXPECT_FALSE(d.reference_metrics);
}

TEST(LoadDesign, TopFromScanWithoutManifest) {
  TempDir t;
  auto dir = t.path() / "designs" / "fft";
  WriteText(dir / "src" / "butterfly.v", "module butterfly; endmodule\n");
  WriteText(dir / "src" / "fft_top.v", "module fft_top; butterfly b0(); endmodule\n");
  WriteText(dir / "tb" / "tb.v", "module tb; fft_top dut(); endmodule\n");
  auto d = LoadDesign(t.path(), "fft");
  EXPECT_EQ(d.top_module, "fft_top");
}

TEST(LoadDesign, Errors) {
  TempDir t;
  EXPECT_EQ(CodeOf([&] { LoadDesign(t.path(), "nope"); }), ErrorCode::kMissingDesign);
  auto dir = t.path() / "designs" / "empty";
  fs::create_directories(dir / "src");
  fs::create_directories(dir / "tb");
  EXPECT_EQ(CodeOf([&] { LoadDesign(t.path(), "empty"); }), ErrorCode::kEmptyDesign);
  auto amb = t.path() / "designs" / "amb";
  WriteText(amb / "src" / "x.v", "module a; endmodule\nmodule b; endmodule\n");
  WriteText(amb / "tb" / "tb.v", "module tb; endmodule\n");
  EXPECT_EQ(CodeOf([&] { LoadDesign(t.path(), "amb"); }), ErrorCode::kAmbiguousTop);
  WriteText(amb / "design.json", R"({"top": "b"})");
  EXPECT_EQ(LoadDesign(t.path(), "amb").top_module, "b");
  WriteText(amb / "design.json", R"({"top": "zzz"})");
  EXPECT_EQ(CodeOf([&] { LoadDesign(t.path(), "amb"); }), ErrorCode::kInvalidDesign);
  auto notb = t.path() / "designs" / "notb";
  WriteText(notb / "src" / "x.v", "module a; endmodule\n");
  EXPECT_EQ(CodeOf([&] { LoadDesign(t.path(), "notb"); }), ErrorCode::kMissingTestbench);
}

TEST(LoadDesign, RoundTrip) {
  TempDir t;
  DesignUnit d = testing::SmallDesign("rt");
  d.source_files.insert(d.source_files.begin(),
                        {"src/helper.v", "module helper; endmodule\n"});
  d.reference_metrics = ResourceMetrics::LutFf(12, 3);
  WriteDesign(t.path(), d);
  DesignUnit back = LoadDesign(t.path(), "rt");
  EXPECT_EQ(back, d);
  WriteDesign(t.path(), back);
  EXPECT_EQ(LoadDesign(t.path(), "rt"), d);
}

TEST(DesignUnit, CombinedSource) {
  DesignUnit d = testing::SmallDesign();
  EXPECT_EQ(d.CombinedSource(), d.source_files[0].text);
  d.source_files.push_back({"src/b.v", "module b; endmodule\n"});
  auto combined = d.CombinedSource();
  EXPECT_NE(combined.find("// file: src/b.v"), std::string::npos);
}

}  // namespace
}  // namespace cradle

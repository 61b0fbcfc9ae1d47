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

#ifndef CRADLE_TESTS_TEST_UTIL_HPP_
#define CRADLE_TESTS_TEST_UTIL_HPP_

#include <stdlib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>

#include "cradle/design.hpp"
#include "cradle/eda.hpp"
#include "cradle/error.hpp"

namespace cradle::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "cradle-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline fs::path Fixture(const std::string& rel) {
  return fs::path(CRADLE_FIXTURE_DIR) / rel;
}

inline std::string ReadText(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteText(const fs::path& p, std::string_view text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Writes an executable /bin/sh script.
inline fs::path WriteScript(const fs::path& p, const std::string& body) {
  WriteText(p, "#!/bin/sh\n" + body + "\n");
  fs::permissions(p, fs::perms::owner_all);
  return p;
}

// EDA stand-in driven by a per-source lookup; unknown sources pass with the
// default metrics.
class FakeEda : public EdaBackend {
 public:
  struct Outcome {
    VerificationVerdict verdict;
    std::optional<ResourceMetrics> metrics;  // nullopt: synthesis fails
  };

  std::function<Outcome(std::string_view source)> decide = [](std::string_view) {
    return Outcome{{}, ResourceMetrics::LutFf(100, 10)};
  };

  SynthReport Synthesize(std::span<const SourceFile> sources, std::string_view,
                         const ToolConfig&, std::stop_token) override {
    ++synth_calls;
    std::string text = Joined(sources);
    auto o = decide(text);
    if (!o.metrics) throw Error(ErrorCode::kCompileError, "synthesis failed");
    std::lock_guard lock(mu_);
    std::string key = "fake:" + std::to_string(pending_.size());
    pending_[key] = *o.metrics;
    return {{}, key, nullptr};
  }

  ResourceMetrics PlaceAndRoute(const fs::path& netlist, const ToolConfig&,
                                std::stop_token) override {
    std::lock_guard lock(mu_);
    return pending_.at(netlist.string());
  }

  VerificationVerdict Simulate(std::span<const SourceFile> sources,
                               std::span<const SourceFile>, const ToolConfig&,
                               const VerdictRules&, std::stop_token) override {
    ++sim_calls;
    return decide(Joined(sources)).verdict;
  }

  std::atomic<int> synth_calls{0};
  std::atomic<int> sim_calls{0};

 private:
  static std::string Joined(std::span<const SourceFile> sources) {
    std::string s;
    for (const auto& f : sources) s += f.text;
    return s;
  }
  std::mutex mu_;
  std::map<std::string, ResourceMetrics> pending_;
};

inline VerificationVerdict Verdict(VerificationStatus s) {
  return {s, s == VerificationStatus::kPass ? "ok" : "Test failed", std::nullopt};
}

// A minimal single-module design.
inline DesignUnit SmallDesign(const std::string& name = "counter8") {
  DesignUnit d;
  d.name = name;
  d.top_module = name;
  d.source_files = {{"src/" + name + ".v",
                     "module " + name + "(input clk, output reg [7:0] q);\n"
                     "  always @(posedge clk) q <= q + 1;\nendmodule\n"}};
  d.testbench_files = {{"tb/tb.v", "module tb; " + name + " dut(); endmodule\n"}};
  return d;
}


// Candidate text for SmallDesign(name): the top header is kept and the
// outcome FakeEda should report is carried in a marker comment.
inline std::string MarkedCandidate(const std::string& name, std::int64_t lut,
                                   std::int64_t ff,
                                   VerificationStatus status = VerificationStatus::kPass) {
  return "module " + name + "(input clk, output reg [7:0] q);\n" +
         "  // outcome " + std::string(StatusName(status)) + " " +
         std::to_string(lut) + " " + std::to_string(ff) + "\n" +
         "  always @(posedge clk) q <= q + 1;\nendmodule\n";
}

// Reads the marker written by MarkedCandidate; other sources pass at 100/10.
inline FakeEda::Outcome MarkerOutcome(std::string_view source) {
  auto at = source.find("// outcome ");
  if (at == std::string_view::npos) return {{}, ResourceMetrics::LutFf(100, 10)};
  std::istringstream in{std::string(source.substr(at + 11))};
  std::string status;
  std::int64_t lut = 0, ff = 0;
  in >> status >> lut >> ff;
  auto st = ParseStatus(status);
  return {{st, st == VerificationStatus::kPass ? "ok" : "Test failed", std::nullopt},
          ResourceMetrics::LutFf(lut, ff)};
}

}  // namespace cradle::testing

#endif  // CRADLE_TESTS_TEST_UTIL_HPP_

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

#include "cradle/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "cradle/error.hpp"
#include "cradle/events.hpp"

namespace cradle::bench {

namespace fs = std::filesystem;
using nlohmann::json;

bool DesignOutcome::operator==(const DesignOutcome& o) const {
  return ref == o.ref && best == o.best && improved == o.improved &&
         reductions == o.reductions && verdict_trail == o.verdict_trail &&
         best_id == o.best_id && iterations == o.iterations &&
         aborted == o.aborted && wall_ms == o.wall_ms &&
         tokens.prompt_tokens == o.tokens.prompt_tokens &&
         tokens.completion_tokens == o.tokens.completion_tokens;
}

Suite DiscoverSuite(const fs::path& dir) {
  Suite suite;
  std::vector<fs::path> dirs;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    std::string name = d.filename().string();
    try {
      suite.designs.push_back(LoadDesignDir(d, name));
    } catch (const Error& e) {
      suite.skipped.push_back(name + ": " + std::string(ErrorCodeName(e.code())) +
                              ": " + e.what());
    }
  }
  if (suite.designs.empty()) {
    throw Error(ErrorCode::kEmptySuite, "no loadable designs under " + dir.string());
  }
  return suite;
}

namespace {

// Keeps what the suite report needs from one loop's event stream.
class OutcomeSink : public EventSink {
 public:
  void Emit(EventKind kind, json payload) override {
    if (kind == EventKind::kMetricsMeasured && payload.at("variant") == 0) {
      ref = payload.at("metrics").get<ResourceMetrics>();
    } else if (kind == EventKind::kVerificationResult &&
               payload.at("variant") != 0) {
      auto v = payload.at("verdict").get<VerificationVerdict>();
      trail.push_back("v" + std::to_string(payload.at("variant").get<std::int64_t>()) +
                      " i" + std::to_string(payload.at("iteration").get<int>()) +
                      " " + std::string(StatusName(v.status)));
    } else if (kind == EventKind::kLoopFinished) {
      finished = std::move(payload);
    }
  }

  std::optional<ResourceMetrics> ref;
  std::vector<std::string> trail;
  std::optional<json> finished;
};

}  // namespace

SuiteResult RunSuite(const Suite& suite, const RunOptions& opts) {
  if (!opts.eda) throw Error(ErrorCode::kInvalidArgument, "no EDA backend");
  if (!opts.chat_factory) throw Error(ErrorCode::kInvalidArgument, "no chat backend");
  opts.loop.Validate();
  SuiteResult result;
  result.skipped = suite.skipped;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto run_one = [&](const DesignUnit& design) {
    auto start = std::chrono::steady_clock::now();
    OutcomeSink sink;
    std::optional<std::string> failure;
    llm::Usage usage;
    try {
      llm::Gateway gateway(opts.chat_factory(design.name), opts.routing);
      agent::LoopHooks hooks;
      hooks.sink = &sink;
      try {
        agent::RunLoop(design, opts.loop, *opts.eda, opts.tools, gateway, hooks);
      } catch (const Error& e) {
        failure = std::string(ErrorCodeName(e.code())) + ": " + e.what();
      }
      usage = gateway.usage();
    } catch (const Error& e) {
      failure = std::string(ErrorCodeName(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
      failure = std::string("Internal: ") + e.what();
    }
    auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    std::lock_guard lock(mu);
    if (!sink.finished || !sink.ref) {
      result.failures[design.name] = failure.value_or("Internal: loop gave no result");
      return false;
    }
    DesignOutcome o;
    o.ref = *sink.ref;
    const json& f = *sink.finished;
    o.best = f.at("best_metrics").get<ResourceMetrics>();
    o.best_id = f.at("best").get<std::int64_t>();
    o.iterations = f.at("iterations").get<int>();
    if (f.contains("aborted") && f.at("aborted").is_string()) {
      o.aborted = f.at("aborted").get<std::string>();
    }
    o.improved = ObjectiveValue(o.best, opts.loop.objective) <
                 ObjectiveValue(o.ref, opts.loop.objective);
    o.reductions = agent::Reductions(o.ref, o.best);
    o.verdict_trail = std::move(sink.trail);
    o.wall_ms = wall;
    o.tokens = usage;
    result.per_design[design.name] = std::move(o);
    return true;
  };

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= suite.designs.size()) return;
      bool ok = run_one(suite.designs[i]);
      if (opts.progress) opts.progress(suite.designs[i].name, ok);
    }
  };
  std::size_t n = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(1, opts.parallelism)), 1,
      std::max<std::size_t>(1, suite.designs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  return result;
}

ReductionStats Aggregate(const SuiteResult& results) {
  ReductionStats s;
  s.total_count = static_cast<int>(results.per_design.size());
  std::set<std::string> classes;
  for (const auto& [name, o] : results.per_design) {
    if (o.improved) ++s.improved_count;
    for (const auto& [cls, n] : o.ref.counts()) classes.insert(cls);
    for (const auto& [cls, n] : o.best.counts()) classes.insert(cls);
  }
  for (const auto& cls : classes) {
    double sum = 0, clamped = 0;
    int n = 0;
    for (const auto& [name, o] : results.per_design) {
      auto it = o.reductions.find(cls);
      if (it == o.reductions.end()) continue;
      sum += it->second;
      clamped += std::max(0.0, it->second);
      ++n;
    }
    if (n == 0) {
      s.mean_reduction[cls] = std::nullopt;
      s.mean_reduction_clamped[cls] = std::nullopt;
    } else {
      s.mean_reduction[cls] = sum / n;
      s.mean_reduction_clamped[cls] = clamped / n;
    }
  }
  return s;
}

double RoundPct(double v) {
  double r = std::round(v * 10.0) / 10.0;
  return r == 0.0 ? 0.0 : r;
}

std::string FormatPct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string ToCsv(const SuiteResult& results) {
  std::string out =
      "design,ref_lut,best_lut,lut_reduction_pct,ref_ff,best_ff,ff_reduction_pct,"
      "improved\n";
  auto pct = [](const DesignOutcome& o, std::string_view cls) {
    auto it = o.reductions.find(cls);
    return it == o.reductions.end() ? std::string() : FormatPct(it->second);
  };
  for (const auto& [name, o] : results.per_design) {
    out += name + "," + std::to_string(o.ref.count(kLut)) + "," +
           std::to_string(o.best.count(kLut)) + "," + pct(o, kLut) + "," +
           std::to_string(o.ref.count(kFf)) + "," +
           std::to_string(o.best.count(kFf)) + "," + pct(o, kFf) + "," +
           (o.improved ? "true" : "false") + "\n";
  }
  return out;
}

namespace {

json PctMap(const Percentages& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = RoundPct(v);
  return j;
}

json OptPctMap(const std::map<std::string, std::optional<double>, std::less<>>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v ? json(RoundPct(*v)) : json(nullptr);
  return j;
}

}  // namespace

json ToJson(const SuiteResult& results) {
  json per = json::object();
  for (const auto& [name, o] : results.per_design) {
    per[name] = {{"ref", o.ref},
                 {"best", o.best},
                 {"improved", o.improved},
                 {"reductions", PctMap(o.reductions)},
                 {"verdict_trail", o.verdict_trail},
                 {"best_variant", o.best_id},
                 {"iterations", o.iterations},
                 {"aborted", o.aborted ? json(*o.aborted) : json(nullptr)},
                 {"wall_ms", o.wall_ms},
                 {"tokens",
                  {{"prompt", o.tokens.prompt_tokens},
                   {"completion", o.tokens.completion_tokens}}}};
  }
  ReductionStats stats = Aggregate(results);
  return {{"per_design", per},
          {"failures", results.failures},
          {"skipped", results.skipped},
          {"aggregate",
           {{"mean_reduction", OptPctMap(stats.mean_reduction)},
            {"mean_reduction_clamped", OptPctMap(stats.mean_reduction_clamped)},
            {"improved_count", stats.improved_count},
            {"total_count", stats.total_count}}}};
}

SuiteResult SuiteFromJson(const json& j) {
  SuiteResult r;
  try {
    for (const auto& [name, d] : j.at("per_design").items()) {
      DesignOutcome o;
      o.ref = d.at("ref").get<ResourceMetrics>();
      o.best = d.at("best").get<ResourceMetrics>();
      o.improved = d.at("improved").get<bool>();
      for (const auto& [cls, v] : d.at("reductions").items()) {
        o.reductions[cls] = v.get<double>();
      }
      o.verdict_trail = d.value("verdict_trail", std::vector<std::string>{});
      o.best_id = d.value("best_variant", std::int64_t{0});
      o.iterations = d.value("iterations", 0);
      if (d.contains("aborted") && d.at("aborted").is_string()) {
        o.aborted = d.at("aborted").get<std::string>();
      }
      o.wall_ms = d.value("wall_ms", std::int64_t{0});
      if (d.contains("tokens")) {
        o.tokens.prompt_tokens = d.at("tokens").value("prompt", std::int64_t{0});
        o.tokens.completion_tokens =
            d.at("tokens").value("completion", std::int64_t{0});
      }
      r.per_design[name] = std::move(o);
    }
    r.failures = j.value("failures", std::map<std::string, std::string>{});
    r.skipped = j.value("skipped", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("suite json: ") + e.what());
  }
  return r;
}

void WriteOutput(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace cradle::bench

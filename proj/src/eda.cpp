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

#include "cradle/eda.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cradle/error.hpp"
#include "cradle/hash.hpp"
#include "cradle/reports.hpp"

namespace cradle {
namespace fs = std::filesystem;
namespace {

constexpr int kExitNotFound = 127;

std::string ReadText(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string SafeName(std::string_view path) {
  std::string name = fs::path(path).filename().string();
  for (char& c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.' || c == '-')) {
      c = '_';
    }
  }
  return name.empty() ? std::string("file.v") : name;
}

// Writes files under <dir>/<sub>/ and returns their shell-safe relative
// paths joined by spaces.
std::string Stage(const fs::path& dir, std::string_view sub,
                  std::span<const SourceFile> files) {
  fs::create_directories(dir / sub);
  std::set<std::string> used;
  std::string joined;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::string name = SafeName(files[i].path);
    if (!used.insert(name).second) {
      name = std::to_string(i) + "_" + name;
      used.insert(name);
    }
    WriteText(dir / sub / name, files[i].text);
    if (!joined.empty()) joined += ' ';
    joined += std::string(sub) + "/" + name;
  }
  return joined;
}

void RequireTool(const std::string& command) {
  std::string word = CommandWord(command);
  if (!CommandResolvable(word)) {
    throw Error(ErrorCode::kToolMissing, "tool not found: " + word);
  }
}

std::string Failure(std::string_view what, const ProcessResult& r,
                    const ScratchDir& scratch) {
  return std::string(what) + " (exit " + std::to_string(r.exit_code) +
         ", scratch kept at " + scratch.path().string() + ")\n" +
         LogTail(r.output);
}

VerificationVerdict MakeVerdict(VerificationStatus s, std::string excerpt,
                                std::optional<std::string> rule = {}) {
  return VerificationVerdict{s, std::move(excerpt), std::move(rule)};
}

}  // namespace

std::string SourcesHash(std::span<const SourceFile> sources) {
  std::vector<std::string_view> texts;
  texts.reserve(sources.size());
  for (const auto& f : sources) texts.push_back(f.text);
  return ContentHash(texts);
}

ResourceMetrics Measure(EdaBackend& eda, std::span<const SourceFile> sources,
                        std::string_view top, const ToolConfig& cfg,
                        std::stop_token stop) {
  SynthReport synth = eda.Synthesize(sources, top, cfg, stop);
  return eda.PlaceAndRoute(synth.netlist_path, cfg, stop);
}

SynthReport ToolchainBackend::Synthesize(std::span<const SourceFile> sources,
                                         std::string_view top,
                                         const ToolConfig& cfg,
                                         std::stop_token stop) {
  if (sources.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "synthesize: no sources");
  }
  auto scratch = std::make_shared<ScratchDir>(cfg.scratch_root);
  const fs::path& dir = scratch->path();
  std::string src = Stage(dir, "src", sources);
  std::string cmd = ExpandTemplate(cfg.synth_cmd, {{"src", src},
                                                   {"top", std::string(top)},
                                                   {"out", "netlist.json"},
                                                   {"target", cfg.target}});
  RequireTool(cmd);
  ProcessResult r =
      RunShell(cmd, dir, std::chrono::seconds(cfg.timeout_s), stop);
  WriteText(dir / "synth.log", r.output);
  if (r.timed_out || r.cancelled) {
    scratch->keep();
    throw Error(ErrorCode::kTimeout, Failure("synthesis timed out", r, *scratch));
  }
  if (r.exit_code == kExitNotFound) {
    throw Error(ErrorCode::kToolMissing, "synthesis tool not runnable: " +
                                             LogTail(r.output, 5));
  }
  if (r.exit_code != 0) {
    scratch->keep();
    throw Error(ErrorCode::kCompileError,
                Failure("synthesis failed", r, *scratch));
  }
  fs::path stats = dir / "stats.json";
  if (!fs::exists(stats)) {
    scratch->keep();
    throw Error(ErrorCode::kStatsUnparseable,
                "synthesis left no stats.json in " + dir.string());
  }
  SynthReport report;
  try {
    report.cell_counts = reports::ParseSynthStats(ReadText(stats));
  } catch (const Error&) {
    scratch->keep();
    throw;
  }
  report.netlist_path = dir / "netlist.json";
  report.scratch = std::move(scratch);
  return report;
}

ResourceMetrics ToolchainBackend::PlaceAndRoute(const fs::path& netlist,
                                                const ToolConfig& cfg,
                                                std::stop_token stop) {
  if (!fs::exists(netlist)) {
    throw Error(ErrorCode::kInvalidArgument,
                "place_and_route: netlist " + netlist.string() + " missing");
  }
  ScratchDir scratch(cfg.scratch_root);
  std::string cmd = ExpandTemplate(
      cfg.pnr_cmd,
      {{"netlist", fs::absolute(netlist).string()}, {"target", cfg.target}});
  RequireTool(cmd);
  ProcessResult r = RunShell(cmd, scratch.path(),
                             std::chrono::seconds(cfg.timeout_s), stop);
  WriteText(scratch.path() / "pnr.log", r.output);
  if (r.timed_out || r.cancelled) {
    scratch.keep();
    throw Error(ErrorCode::kTimeout,
                Failure("place-and-route timed out", r, scratch));
  }
  if (r.exit_code == kExitNotFound) {
    throw Error(ErrorCode::kToolMissing, "place-and-route tool not runnable: " +
                                             LogTail(r.output, 5));
  }
  if (r.exit_code != 0) {
    scratch.keep();
    throw Error(ErrorCode::kPnrFailed,
                Failure("place-and-route failed", r, scratch));
  }
  try {
    return reports::ParsePnrUtilization(r.output, cfg.class_map);
  } catch (const Error&) {
    scratch.keep();
    throw;
  }
}

VerificationVerdict ToolchainBackend::Simulate(
    std::span<const SourceFile> sources,
    std::span<const SourceFile> testbench_files, const ToolConfig& cfg,
    const VerdictRules& rules, std::stop_token stop) {
  if (testbench_files.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "simulate: no testbench files");
  }
  ScratchDir scratch(cfg.scratch_root);
  const fs::path& dir = scratch.path();
  std::string src = Stage(dir, "src", sources);
  std::string tb = Stage(dir, "tb", testbench_files);
  const auto timeout = std::chrono::seconds(cfg.timeout_s);
  std::map<std::string, std::string> vars = {
      {"src", src}, {"tb", tb}, {"out", "sim.out"}, {"target", cfg.target}};

  std::string compile = ExpandTemplate(cfg.sim_compile_cmd, vars);
  std::string word = CommandWord(compile);
  if (!CommandResolvable(word)) {
    return MakeVerdict(VerificationStatus::kToolMissing,
                       "tool not found: " + word);
  }
  ProcessResult c = RunShell(compile, dir, timeout, stop);
  WriteText(dir / "compile.log", c.output);
  if (c.timed_out || c.cancelled) {
    scratch.keep();
    return MakeVerdict(VerificationStatus::kTimeout, LogTail(c.output));
  }
  if (c.exit_code == kExitNotFound) {
    return MakeVerdict(VerificationStatus::kToolMissing, LogTail(c.output));
  }
  if (c.exit_code != 0) {
    scratch.keep();
    return MakeVerdict(VerificationStatus::kCompileError, LogTail(c.output),
                       "exit code " + std::to_string(c.exit_code));
  }

  std::string run = ExpandTemplate(cfg.sim_run_cmd, vars);
  word = CommandWord(run);
  if (!CommandResolvable(word)) {
    return MakeVerdict(VerificationStatus::kToolMissing,
                       "tool not found: " + word);
  }
  ProcessResult s = RunShell(run, dir, timeout, stop);
  WriteText(dir / "sim.log", s.output);
  if (s.timed_out || s.cancelled) {
    scratch.keep();
    return MakeVerdict(VerificationStatus::kTimeout, LogTail(s.output));
  }
  if (s.exit_code == kExitNotFound) {
    return MakeVerdict(VerificationStatus::kToolMissing, LogTail(s.output));
  }
  VerificationVerdict v = ClassifySimulation(s.exit_code, s.output, rules);
  if (!v.passed()) scratch.keep();
  return v;
}

std::string_view RecordKindName(RecordKind k) {
  switch (k) {
    case RecordKind::kSim: return "sim";
    case RecordKind::kSynth: return "synth";
    case RecordKind::kPnr: return "pnr";
  }
  return "?";
}

ReplayRecord ParseReplayRecord(const nlohmann::json& j) {
  ReplayRecord r;
  r.hash = j.at("hash").get<std::string>();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "sim") {
    r.kind = RecordKind::kSim;
  } else if (kind == "synth") {
    r.kind = RecordKind::kSynth;
  } else if (kind == "pnr") {
    r.kind = RecordKind::kPnr;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown record kind " + kind);
  }
  r.payload = j.at("payload");
  return r;
}

nlohmann::json ToJson(const ReplayRecord& r) {
  return {{"hash", r.hash},
          {"kind", RecordKindName(r.kind)},
          {"payload", r.payload}};
}

ReplayBackend::ReplayBackend(std::vector<ReplayRecord> records) {
  for (auto& r : records) {
    records_[{r.kind, r.hash}].payloads.push_back(std::move(r.payload));
  }
}

std::unique_ptr<ReplayBackend> ReplayBackend::FromDir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoError, "no replay fixture directory " +
                                         dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ReplayRecord> records;
  for (const auto& f : files) {
    std::istringstream in(ReadText(f));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        records.push_back(ParseReplayRecord(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument,
                    f.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
      }
    }
  }
  return std::make_unique<ReplayBackend>(std::move(records));
}

const nlohmann::json& ReplayBackend::Lookup(RecordKind kind,
                                            const std::string& hash) {
  std::lock_guard lock(mu_);
  auto it = records_.find({kind, hash});
  if (it == records_.end()) {
    throw Error(ErrorCode::kFixtureMiss,
                "no " + std::string(RecordKindName(kind)) +
                    " record for source hash " + hash);
  }
  Queue& q = it->second;
  const nlohmann::json& payload = q.payloads[q.next];
  if (q.next + 1 < q.payloads.size()) ++q.next;
  if (payload.contains("error")) {
    auto code = ErrorCodeFromName(payload["error"].get<std::string>());
    throw Error(code.value_or(ErrorCode::kCompileError),
                payload.value("message", std::string("recorded failure")));
  }
  return payload;
}

SynthReport ReplayBackend::Synthesize(std::span<const SourceFile> sources,
                                      std::string_view /*top*/,
                                      const ToolConfig& /*cfg*/,
                                      std::stop_token /*stop*/) {
  if (sources.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "synthesize: no sources");
  }
  std::string hash = SourcesHash(sources);
  const nlohmann::json& payload = Lookup(RecordKind::kSynth, hash);
  SynthReport report;
  for (const auto& [cell, n] : payload.at("cell_counts").items()) {
    report.cell_counts[cell] = n.get<std::int64_t>();
  }
  report.netlist_path = "replay:" + hash;
  return report;
}

ResourceMetrics ReplayBackend::PlaceAndRoute(const fs::path& netlist,
                                             const ToolConfig& /*cfg*/,
                                             std::stop_token /*stop*/) {
  std::string key = netlist.string();
  constexpr std::string_view kPrefix = "replay:";
  if (!key.starts_with(kPrefix)) {
    throw Error(ErrorCode::kInvalidArgument,
                "replay place_and_route needs a replay netlist, got " + key);
  }
  return Lookup(RecordKind::kPnr, key.substr(kPrefix.size()))
      .get<ResourceMetrics>();
}

VerificationVerdict ReplayBackend::Simulate(
    std::span<const SourceFile> sources,
    std::span<const SourceFile> testbench_files, const ToolConfig& /*cfg*/,
    const VerdictRules& /*rules*/, std::stop_token /*stop*/) {
  if (testbench_files.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "simulate: no testbench files");
  }
  return Lookup(RecordKind::kSim, SourcesHash(sources))
      .get<VerificationVerdict>();
}

}  // namespace cradle

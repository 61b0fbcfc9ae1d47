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

#include <signal.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cradle/agent.hpp"
#include "cradle/backends.hpp"
#include "cradle/bench.hpp"
#include "cradle/design.hpp"
#include "cradle/error.hpp"
#include "cradle/hash.hpp"
#include "cradle/service.hpp"
#include "cradle/session.hpp"
#include "cradle/tool_config.hpp"

namespace fs = std::filesystem;
using namespace cradle;
using nlohmann::json;

namespace {

struct Common {
  std::string workspace = ".";
  std::string backend = "live";
  std::string eda;
  std::string tools;
  int iters = 3;
  int repairs = 2;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("-w,--workspace", c.workspace, "Workspace root (holds designs/)");
  app->add_option("--backend", c.backend,
                  "live | scripted:<file-or-dir> | replay:<dir>");
  app->add_option("--eda", c.eda, "Override tool backend: tools | replay:<dir>");
  app->add_option("--tools", c.tools, "Tool configuration JSON");
  app->add_option("--iters", c.iters, "Planning rounds per exploration")
      ->check(CLI::Range(1, 100));
  app->add_option("--repairs", c.repairs, "Repair attempts per round")
      ->check(CLI::Range(0, 100));
}

backends::BackendSpec Spec(const Common& c) {
  auto spec = backends::ParseBackend(c.backend);
  if (!c.eda.empty()) backends::ApplyEdaOverride(spec, c.eda);
  return spec;
}

ToolConfig Tools(const Common& c) {
  if (c.tools.empty()) return ToolConfig::Defaults();
  std::ifstream in(c.tools);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + c.tools);
  ToolConfig cfg = json::parse(in).get<ToolConfig>();
  cfg.Validate();
  return cfg;
}

agent::LoopConfig Loop(const Common& c) {
  agent::LoopConfig cfg;
  cfg.max_iterations = c.iters;
  cfg.repair_attempts = c.repairs;
  return cfg;
}

std::string Counts(const ResourceMetrics& m) {
  std::string s;
  for (const auto& [cls, n] : m.counts()) {
    if (!s.empty()) s += " ";
    s += cls + "=" + std::to_string(n);
  }
  return s;
}

std::string Describe(const SessionEvent& e) {
  const json& p = e.payload;
  switch (e.kind) {
    case EventKind::kUserMessage:
      return "";
    case EventKind::kAgentMessage:
      return p.value("text", "");
    case EventKind::kPlanCreated: {
      std::string s = "[plan " + std::to_string(p.value("iteration", 0)) + "]";
      if (p.value("stop", false)) s += " no further optimization";
      for (const auto& step : p.value("steps", std::vector<std::string>{})) {
        s += "\n  - " + step;
      }
      return s;
    }
    case EventKind::kCandidateProduced:
      return "[candidate v" + std::to_string(p.value("variant", 0)) + ", attempt " +
             std::to_string(p.value("attempt", 0)) + "]";
    case EventKind::kVerificationResult: {
      auto v = p.at("verdict").get<VerificationVerdict>();
      std::string s = "[verify v" + std::to_string(p.value("variant", 0)) + "] " +
                      std::string(StatusName(v.status));
      if (v.matched_rule) s += " (" + *v.matched_rule + ")";
      return s;
    }
    case EventKind::kMetricsMeasured:
      return "[metrics v" + std::to_string(p.value("variant", 0)) + "] " +
             Counts(p.at("metrics").get<ResourceMetrics>());
    case EventKind::kBestUpdated: {
      std::string s = "[best v" + std::to_string(p.value("variant", 0)) + "]";
      for (const auto& [cls, v] : p.at("reductions").items()) {
        s += " " + cls + " -" + bench::FormatPct(v.get<double>()) + "%";
      }
      return s;
    }
    case EventKind::kLoopFinished:
      return "[finished] best v" + std::to_string(p.value("best", 0));
    case EventKind::kError:
      return "[error " + p.value("code", std::string("?")) + "] " +
             p.value("message", std::string());
  }
  return "";
}

// Appends loop events to a JSONL log and optionally echoes them.
class LogSink : public EventSink {
 public:
  LogSink(session::EventLog& log, bool echo) : log_(log), echo_(echo) {}
  void Emit(EventKind kind, json payload) override {
    auto e = log_.Append(kind, std::move(payload));
    if (echo_) {
      auto text = Describe(e);
      if (!text.empty()) std::cerr << text << "\n";
    }
  }

 private:
  session::EventLog& log_;
  bool echo_;
};

int RunOptimize(const Common& c, const std::string& design_name,
                std::string log_path, const std::vector<std::string>& guidance,
                bool as_json, bool verbose) {
  auto spec = Spec(c);
  DesignUnit design = LoadDesign(c.workspace, design_name);
  auto eda = backends::MakeEda(spec);
  llm::Gateway gateway(backends::MakeChatFactory(spec)(design_name));
  if (log_path.empty()) {
    log_path = (fs::path(c.workspace) / "runs" / design_name / "events.jsonl").string();
  }
  std::error_code ec;
  fs::remove(log_path, ec);
  session::EventLog log(log_path);
  LogSink sink(log, verbose);
  agent::LoopHooks hooks;
  hooks.sink = &sink;
  hooks.initial_guidance = guidance;
  auto r = agent::RunLoop(design, Loop(c), *eda, Tools(c), gateway, hooks);

  if (as_json) {
    json out = {{"design", design.name},
                {"best", r.best.id},
                {"reference_metrics", *r.reference.metrics},
                {"best_metrics", *r.best.metrics},
                {"reductions", json::object()},
                {"iterations", r.iterations.size()},
                {"stopped_early", r.stopped_early},
                {"log", log_path}};
    for (const auto& [cls, v] : r.reductions) out["reductions"][cls] = bench::RoundPct(v);
    if (r.aborted) out["aborted"] = *r.aborted;
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "design " << design.name << " (top " << design.top_module << ")\n";
    std::cout << "iterations: " << r.iterations.size()
              << (r.stopped_early ? " (optimizer stopped)" : "") << "\n";
    if (r.aborted) std::cout << "aborted: " << *r.aborted << "\n";
    std::cout << "best: "
              << (r.best.is_reference() ? std::string("reference")
                                        : "variant " + std::to_string(r.best.id))
              << "\n";
    for (const auto& [cls, ref] : r.reference.metrics->counts()) {
      std::cout << "  " << cls << ": " << ref << " -> " << r.best.metrics->count(cls);
      auto it = r.reductions.find(cls);
      if (it != r.reductions.end()) {
        std::cout << " (" << bench::FormatPct(it->second) << "% reduction)";
      }
      std::cout << "\n";
    }
    std::cout << "log: " << log_path << "\n";
    if (!r.best.is_reference()) {
      fs::path out = fs::path(log_path).parent_path() / "best.v";
      std::ofstream(out, std::ios::binary) << r.best.source_text;
      std::cout << "best source: " << out.string() << "\n";
    }
  }
  return r.aborted ? 2 : 0;
}

int RunBench(const Common& c, const std::string& suite_dir, const std::string& out_csv,
             const std::string& out_json, int parallel) {
  auto spec = Spec(c);
  auto suite = bench::DiscoverSuite(suite_dir);
  for (const auto& s : suite.skipped) std::cerr << "skipped " << s << "\n";
  bench::RunOptions opts;
  opts.loop = Loop(c);
  opts.tools = Tools(c);
  opts.parallelism = parallel;
  opts.eda = backends::MakeEda(spec);
  opts.chat_factory = backends::MakeChatFactory(spec);
  opts.progress = [](const std::string& name, bool ok) {
    std::cerr << (ok ? "done   " : "failed ") << name << "\n";
  };
  auto results = bench::RunSuite(suite, opts);
  bench::WriteOutput(out_csv, bench::ToCsv(results));
  if (!out_json.empty()) {
    bench::WriteOutput(out_json, bench::ToJson(results).dump(2) + "\n");
  }
  for (const auto& [name, why] : results.failures) {
    std::cerr << "failure " << name << ": " << why << "\n";
  }
  auto stats = bench::Aggregate(results);
  std::cout << "improved " << stats.improved_count << "/" << stats.total_count << "\n";
  for (const auto& [cls, mean] : stats.mean_reduction) {
    std::cout << "mean " << cls << " reduction: "
              << (mean ? bench::FormatPct(*mean) + "%" : std::string("n/a"));
    auto cl = stats.mean_reduction_clamped[cls];
    if (cl) std::cout << " (clamped " << bench::FormatPct(*cl) << "%)";
    std::cout << "\n";
  }
  return 0;
}

session::SessionDeps Deps(const Common& c) {
  auto spec = Spec(c);
  session::SessionDeps deps;
  deps.workspace = c.workspace;
  deps.eda = backends::MakeEda(spec);
  deps.tools = Tools(c);
  deps.chat_factory = backends::MakeChatFactory(spec);
  return deps;
}

int RunChat(const Common& c, const std::string& design_name, const std::string& resume) {
  session::SessionManager manager(Deps(c));
  auto s = resume.empty() ? manager.Create(design_name, Loop(c)) : manager.Get(resume);
  std::cout << "session " << s->id() << "\n";
  std::atomic<bool> done{false};
  std::int64_t printed = 0;
  std::mutex out_mu;
  auto flush = [&] {
    std::lock_guard lock(out_mu);
    for (const auto& e : s->ReadEvents(printed)) {
      auto text = Describe(e);
      if (!text.empty()) std::cout << text << "\n";
      printed = e.seq;
    }
    std::cout.flush();
  };
  flush();
  std::jthread printer([&] {
    while (!done.load()) {
      if (s->WaitForEvents(printed, std::chrono::milliseconds(200))) flush();
    }
  });
  std::string line;
  while (true) {
    {
      std::lock_guard lock(out_mu);
      std::cout << "cradle> " << std::flush;
    }
    if (!std::getline(std::cin, line)) break;
    if (line.empty()) continue;
    if (line == "/quit" || line == "/exit") break;
    try {
      s->PostMessage(line);
    } catch (const Error& e) {
      std::lock_guard lock(out_mu);
      std::cout << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    }
    flush();
  }
  s->WaitIdle();
  done = true;
  printer.join();
  flush();
  return 0;
}

bool IsLoopback(const std::string& bind) {
  return bind == "127.0.0.1" || bind == "localhost" || bind == "::1";
}

int RunServe(const Common& c, const std::string& bind, int port,
             const std::string& static_dir, bool allow_remote) {
  if (!IsLoopback(bind) && !allow_remote) {
    throw Error(ErrorCode::kInvalidArgument,
                "binding " + bind + " needs --allow-remote (there is no auth layer)");
  }
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  session::SessionManager manager(Deps(c));
  service::ServiceOptions opts;
  opts.bind = bind;
  opts.port = port;
  if (!static_dir.empty()) opts.static_dir = static_dir;
  if (const char* key = std::getenv("CRADLE_API_KEY"); key && *key) {
    opts.secrets.push_back(key);
  }
  service::Service svc(manager, opts);
  int bound = svc.Start();
  std::cerr << "serving " << c.workspace << " on http://" << bind << ":" << bound << "\n";
  int sig = 0;
  sigwait(&sigs, &sig);
  std::cerr << "shutting down\n";
  svc.Stop();
  manager.Shutdown();
  return 0;
}

int RunHash(const std::vector<std::string>& files) {
  std::vector<std::string> texts;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read " + f);
    texts.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::vector<std::string_view> views(texts.begin(), texts.end());
  std::cout << ContentHash(views) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cradle: conversational RTL design space exploration"};
  app.require_subcommand(1);

  Common opt_common, bench_common, chat_common, serve_common;

  auto* optimize = app.add_subcommand("optimize", "Run one exploration on a design");
  std::string opt_design, opt_log;
  std::vector<std::string> opt_guidance;
  bool opt_json = false, opt_verbose = false;
  optimize->add_option("design", opt_design, "Design name under designs/")->required();
  optimize->add_option("--log", opt_log, "Event log path");
  optimize->add_option("-g,--guidance", opt_guidance, "Designer guidance (repeatable)");
  optimize->add_flag("--json", opt_json, "Print the result as JSON");
  optimize->add_flag("-v,--verbose", opt_verbose, "Echo events to stderr");
  AddCommon(optimize, opt_common);

  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
  std::string suite_dir, out_csv, out_json;
  int parallel = 1;
  bench_cmd->add_option("suite", suite_dir, "Suite directory (designs layout)")->required();
  bench_cmd->add_option("--out", out_csv, "CSV output")->required();
  bench_cmd->add_option("--json", out_json, "JSON output");
  bench_cmd->add_option("--parallel", parallel, "Designs in flight")
      ->check(CLI::Range(1, 256));
  AddCommon(bench_cmd, bench_common);

  auto* chat = app.add_subcommand("chat", "Interactive session on a design");
  std::string chat_design, chat_resume;
  chat->add_option("design", chat_design, "Design name under designs/");
  chat->add_option("--session", chat_resume, "Resume a session by id");
  AddCommon(chat, chat_common);

  auto* serve = app.add_subcommand("serve", "HTTP service over a workspace");
  std::string bind = "127.0.0.1", static_dir;
  int port = 8745;
  bool allow_remote = false;
  serve->add_option("--bind", bind, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--static", static_dir, "Directory served under /");
  serve->add_flag("--allow-remote", allow_remote, "Permit a non-loopback bind");
  AddCommon(serve, serve_common);

  auto* hash = app.add_subcommand("hash", "Replay-record hash of source files");
  std::vector<std::string> hash_files;
  hash->add_option("files", hash_files, "Files, in order")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) {
      return RunOptimize(opt_common, opt_design, opt_log, opt_guidance, opt_json,
                         opt_verbose);
    }
    if (*bench_cmd) return RunBench(bench_common, suite_dir, out_csv, out_json, parallel);
    if (*chat) {
      if (chat_design.empty() && chat_resume.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "chat needs a design or --session");
      }
      return RunChat(chat_common, chat_design, chat_resume);
    }
    if (*serve) return RunServe(serve_common, bind, port, static_dir, allow_remote);
    if (*hash) return RunHash(hash_files);
  } catch (const Error& e) {
    std::cerr << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

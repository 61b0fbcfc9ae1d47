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

#include "cradle/design.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cradle/error.hpp"
#include "cradle/verilog_scan.hpp"

namespace cradle {
namespace fs = std::filesystem;

ResourceMetrics::ResourceMetrics() {
  counts_[std::string(kLut)] = 0;
  counts_[std::string(kFf)] = 0;
}

ResourceMetrics::ResourceMetrics(ClassCounts counts) : ResourceMetrics() {
  for (auto& [cls, n] : counts) set(cls, n);
}

ResourceMetrics ResourceMetrics::LutFf(std::int64_t lut, std::int64_t ff) {
  ResourceMetrics m;
  m.set(kLut, lut);
  m.set(kFf, ff);
  return m;
}

std::int64_t ResourceMetrics::count(std::string_view cls) const {
  auto it = counts_.find(cls);
  return it == counts_.end() ? 0 : it->second;
}

void ResourceMetrics::set(std::string_view cls, std::int64_t n) {
  if (n < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "negative count for resource class " + std::string(cls));
  }
  if (cls.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty resource class name");
  }
  counts_[std::string(cls)] = n;
}

void ResourceMetrics::add(std::string_view cls, std::int64_t n) {
  set(cls, count(cls) + n);
}

std::int64_t ResourceMetrics::total() const {
  std::int64_t t = 0;
  for (const auto& [cls, n] : counts_) t += n;
  return t;
}

void Objective::Validate() const {
  if (primary_class == secondary_class) {
    throw Error(ErrorCode::kInvalidArgument,
                "objective primary and secondary class must differ");
  }
  if (weights) {
    bool any_positive = false;
    for (const auto& [cls, w] : *weights) {
      if (!(w >= 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "objective weight for " + cls + " must be non-negative");
      }
      any_positive |= w > 0.0;
    }
    if (!any_positive) {
      throw Error(ErrorCode::kInvalidArgument,
                  "objective weights need at least one positive entry");
    }
  }
}

std::weak_ordering ObjectiveKey::operator<=>(const ObjectiveKey& o) const {
  if (weighted && o.weighted) {
    if (*weighted < *o.weighted) return std::weak_ordering::less;
    if (*weighted > *o.weighted) return std::weak_ordering::greater;
    return std::weak_ordering::equivalent;
  }
  if (auto c = primary <=> o.primary; c != 0) return c;
  return secondary <=> o.secondary;
}

std::string ObjectiveKey::ToString() const {
  if (weighted) {
    std::ostringstream os;
    os << *weighted;
    return os.str();
  }
  return "(" + std::to_string(primary) + "," + std::to_string(secondary) + ")";
}

ObjectiveKey ObjectiveValue(const ResourceMetrics& metrics,
                            const Objective& objective) {
  ObjectiveKey key;
  key.primary = metrics.count(objective.primary_class);
  key.secondary = metrics.count(objective.secondary_class);
  if (objective.weights) {
    double sum = 0.0;
    for (const auto& [cls, w] : *objective.weights) {
      sum += w * static_cast<double>(metrics.count(cls));
    }
    key.weighted = sum;
  }
  return key;
}

double Reduction(const ResourceMetrics& reference,
                 const ResourceMetrics& candidate, std::string_view cls) {
  const std::int64_t ref = reference.count(cls);
  const std::int64_t cand = candidate.count(cls);
  if (ref == 0) {
    if (cand == 0) return 0.0;
    throw Error(ErrorCode::kUndefinedReduction,
                "reduction of " + std::string(cls) +
                    " undefined: reference count is 0");
  }
  return 100.0 * static_cast<double>(ref - cand) / static_cast<double>(ref);
}

std::string DesignUnit::CombinedSource() const {
  if (source_files.size() == 1) return source_files.front().text;
  std::string out;
  for (const auto& f : source_files) {
    out += "// file: " + f.path + "\n";
    out += f.text;
    if (!f.text.empty() && f.text.back() != '\n') out += '\n';
  }
  return out;
}

std::vector<std::string_view> DesignUnit::SourceTexts() const {
  std::vector<std::string_view> out;
  out.reserve(source_files.size());
  for (const auto& f : source_files) out.push_back(f.text);
  return out;
}

void Variant::CheckInvariants() const {
  if (metrics && !verdict.passed()) {
    throw Error(ErrorCode::kInvalidArgument,
                "variant " + std::to_string(id) +
                    " carries metrics but did not pass verification");
  }
  if (id != 0 && iteration < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "candidate variant " + std::to_string(id) +
                    " has no iteration");
  }
}

std::size_t HierarchyNode::NodeCount() const {
  std::size_t n = 1;
  for (const auto& i : instances) n += i.child.NodeCount();
  return n;
}

std::size_t HierarchyNode::EdgeCount() const {
  std::size_t n = instances.size();
  for (const auto& i : instances) n += i.child.EdgeCount();
  return n;
}

std::size_t HierarchyNode::Depth() const {
  std::size_t d = 0;
  for (const auto& i : instances) d = std::max(d, i.child.Depth());
  return d + 1;
}

bool HierarchyNode::operator==(const HierarchyNode& o) const {
  return module_name == o.module_name && instances == o.instances;
}

namespace {

struct ModuleGraph {
  // declaration order preserved for deterministic output
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<verilog::InstanceRef>> edges;
};

ModuleGraph BuildGraph(std::span<const std::string_view> sources) {
  ModuleGraph g;
  for (std::string_view src : sources) {
    for (auto& decl : verilog::ScanModules(src)) {
      if (g.edges.contains(decl.name)) continue;
      g.order.push_back(decl.name);
      g.edges.emplace(decl.name, std::move(decl.instances));
    }
  }
  if (g.order.empty()) {
    throw Error(ErrorCode::kParseGaveNothing, "no module declarations found");
  }
  for (auto& [name, insts] : g.edges) {
    std::erase_if(insts, [&](const verilog::InstanceRef& r) {
      return !g.edges.contains(r.module_name);
    });
  }
  // Reject recursion anywhere in the graph, reachable from the top or not.
  enum class Mark { kNew, kActive, kDone };
  std::unordered_map<std::string, Mark> mark;
  std::function<void(const std::string&)> visit = [&](const std::string& m) {
    mark[m] = Mark::kActive;
    for (const auto& r : g.edges.at(m)) {
      Mark s = mark.contains(r.module_name) ? mark[r.module_name] : Mark::kNew;
      if (s == Mark::kActive) {
        throw Error(ErrorCode::kCyclicHierarchy,
                    "recursive instantiation: " + m + " -> " + r.module_name);
      }
      if (s == Mark::kNew) visit(r.module_name);
    }
    mark[m] = Mark::kDone;
  };
  for (const auto& m : g.order) {
    if (!mark.contains(m)) visit(m);
  }
  return g;
}

std::string UniqueRoot(const ModuleGraph& g) {
  std::set<std::string> instantiated;
  for (const auto& [name, insts] : g.edges) {
    for (const auto& r : insts) instantiated.insert(r.module_name);
  }
  std::vector<std::string> roots;
  for (const auto& m : g.order) {
    if (!instantiated.contains(m)) roots.push_back(m);
  }
  if (roots.size() != 1) {
    std::string names;
    for (const auto& r : roots) names += (names.empty() ? "" : ", ") + r;
    throw Error(ErrorCode::kAmbiguousTop,
                "cannot pick a top module among uninstantiated modules: " +
                    names);
  }
  return roots.front();
}

HierarchyNode BuildTree(const ModuleGraph& g, const std::string& module) {
  HierarchyNode node{module, {}};
  for (const auto& r : g.edges.at(module)) {
    node.instances.push_back({r.instance_name, BuildTree(g, r.module_name)});
  }
  return node;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& p, std::string_view text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
}

std::vector<SourceFile> ReadVerilogDir(const fs::path& design_dir,
                                       std::string_view sub) {
  std::vector<SourceFile> out;
  fs::path dir = design_dir / sub;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".v") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    out.push_back({std::string(sub) + "/" + f.filename().string(), ReadFile(f)});
  }
  return out;
}

}  // namespace

std::string ResolveTopModule(std::span<const std::string_view> sources) {
  return UniqueRoot(BuildGraph(sources));
}

HierarchyNode ExtractHierarchy(std::span<const std::string_view> sources,
                               std::optional<std::string_view> top) {
  ModuleGraph g = BuildGraph(sources);
  std::string root = top ? std::string(*top) : UniqueRoot(g);
  if (!g.edges.contains(root)) {
    throw Error(ErrorCode::kInvalidDesign,
                "top module '" + root + "' is not declared");
  }
  return BuildTree(g, root);
}

DesignUnit LoadDesignDir(const fs::path& dir, std::string_view design_name) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingDesign,
                "no design directory " + dir.string());
  }
  DesignUnit unit;
  unit.name = std::string(design_name);
  if (unit.name.empty()) {
    throw Error(ErrorCode::kInvalidDesign, "design name is empty");
  }
  unit.source_files = ReadVerilogDir(dir, "src");
  if (unit.source_files.empty()) {
    throw Error(ErrorCode::kEmptyDesign,
                "design " + unit.name + " has no src/*.v files");
  }
  unit.testbench_files = ReadVerilogDir(dir, "tb");
  if (unit.testbench_files.empty()) {
    throw Error(ErrorCode::kMissingTestbench,
                "design " + unit.name + " has no tb/*.v files");
  }

  std::vector<std::string_view> texts = unit.SourceTexts();
  ModuleGraph graph = BuildGraph(texts);

  fs::path manifest = dir / "design.json";
  nlohmann::json m = nlohmann::json::object();
  if (fs::exists(manifest)) {
    try {
      m = nlohmann::json::parse(ReadFile(manifest));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidDesign,
                  "bad manifest " + manifest.string() + ": " + e.what());
    }
  }
  if (m.contains("top")) {
    unit.top_module = m["top"].get<std::string>();
    if (!graph.edges.contains(unit.top_module)) {
      throw Error(ErrorCode::kInvalidDesign,
                  "manifest top '" + unit.top_module + "' is not declared");
    }
  } else {
    unit.top_module = UniqueRoot(graph);
  }
  if (m.contains("reference_metrics")) {
    unit.reference_metrics = m["reference_metrics"].get<ResourceMetrics>();
  }
  if (m.contains("verdict")) unit.verdict_rules = m["verdict"].get<VerdictRules>();
  return unit;
}

DesignUnit LoadDesign(const fs::path& workspace_root,
                      std::string_view design_name) {
  return LoadDesignDir(workspace_root / "designs" / design_name, design_name);
}

void WriteDesign(const fs::path& workspace_root, const DesignUnit& unit) {
  fs::path dir = workspace_root / "designs" / unit.name;
  for (const auto& f : unit.source_files) WriteFile(dir / f.path, f.text);
  for (const auto& f : unit.testbench_files) WriteFile(dir / f.path, f.text);
  nlohmann::json m = {{"top", unit.top_module}};
  if (unit.reference_metrics) m["reference_metrics"] = *unit.reference_metrics;
  if (unit.verdict_rules) m["verdict"] = *unit.verdict_rules;
  WriteFile(dir / "design.json", m.dump(2) + "\n");
}

void to_json(nlohmann::json& j, const ResourceMetrics& m) {
  j = {{"counts", nlohmann::json::object()}};
  for (const auto& [cls, n] : m.counts()) j["counts"][cls] = n;
}

void from_json(const nlohmann::json& j, ResourceMetrics& m) {
  const nlohmann::json& counts = j.contains("counts") ? j.at("counts") : j;
  m = ResourceMetrics();
  for (const auto& [cls, n] : counts.items()) {
    if (!n.is_number_integer()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "count for " + cls + " is not an integer");
    }
    m.set(cls, n.get<std::int64_t>());
  }
}

void to_json(nlohmann::json& j, const Objective& o) {
  j = {{"primary_class", o.primary_class},
       {"secondary_class", o.secondary_class}};
  if (o.weights) {
    j["weights"] = nlohmann::json::object();
    for (const auto& [cls, w] : *o.weights) j["weights"][cls] = w;
  }
}

void from_json(const nlohmann::json& j, Objective& o) {
  o = Objective{};
  o.primary_class = j.value("primary_class", std::string(kLut));
  o.secondary_class = j.value("secondary_class", std::string(kFf));
  if (auto it = j.find("weights"); it != j.end() && !it->is_null()) {
    o.weights.emplace();
    for (const auto& [cls, w] : it->items()) (*o.weights)[cls] = w.get<double>();
  }
  o.Validate();
}

void to_json(nlohmann::json& j, const HierarchyNode& n) {
  j = {{"module", n.module_name}, {"instances", nlohmann::json::array()}};
  for (const auto& i : n.instances) {
    j["instances"].push_back({{"name", i.instance_name}, {"child", i.child}});
  }
}

void to_json(nlohmann::json& j, const Variant& v) {
  j = {{"id", v.id},
       {"iteration", v.iteration},
       {"verdict", v.verdict},
       {"source", v.source_text}};
  j["metrics"] = v.metrics ? nlohmann::json(*v.metrics) : nlohmann::json(nullptr);
  j["plan_ref"] = v.plan_ref ? nlohmann::json(*v.plan_ref) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Variant& v) {
  v = Variant{};
  v.id = j.at("id").get<std::int64_t>();
  v.iteration = j.value("iteration", 0);
  v.verdict = j.at("verdict").get<VerificationVerdict>();
  v.source_text = j.value("source", "");
  if (auto it = j.find("metrics"); it != j.end() && !it->is_null()) {
    v.metrics = it->get<ResourceMetrics>();
  }
  if (auto it = j.find("plan_ref"); it != j.end() && !it->is_null()) {
    v.plan_ref = it->get<int>();
  }
}

}  // namespace cradle

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

#ifndef CRADLE_DESIGN_HPP_
#define CRADLE_DESIGN_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cradle/verdict.hpp"
#include "json.hpp"

namespace cradle {

// Resource classes are open strings; these two are always present.
inline constexpr std::string_view kLut = "LUT";
inline constexpr std::string_view kFf = "FF";

using ClassCounts = std::map<std::string, std::int64_t, std::less<>>;

class ResourceMetrics {
 public:
  ResourceMetrics();
  // Throws InvalidArgument on negative counts.
  explicit ResourceMetrics(ClassCounts counts);
  static ResourceMetrics LutFf(std::int64_t lut, std::int64_t ff);

  // Missing classes read as 0.
  std::int64_t count(std::string_view cls) const;
  void set(std::string_view cls, std::int64_t n);
  void add(std::string_view cls, std::int64_t n);
  std::int64_t total() const;
  const ClassCounts& counts() const { return counts_; }

  bool operator==(const ResourceMetrics&) const = default;

 private:
  ClassCounts counts_;
};

struct Objective {
  std::string primary_class{kLut};
  std::string secondary_class{kFf};
  // When set, a weighted sum replaces the lexicographic order.
  std::optional<std::map<std::string, double, std::less<>>> weights;

  // Throws InvalidArgument if an invariant is broken.
  void Validate() const;
  bool operator==(const Objective&) const = default;
};

// Lower is better. Keys from the same objective form a total order.
struct ObjectiveKey {
  std::int64_t primary = 0;
  std::int64_t secondary = 0;
  std::optional<double> weighted;

  std::weak_ordering operator<=>(const ObjectiveKey& o) const;
  bool operator==(const ObjectiveKey& o) const {
    return (*this <=> o) == std::weak_ordering::equivalent;
  }
  std::string ToString() const;
};

ObjectiveKey ObjectiveValue(const ResourceMetrics& metrics,
                            const Objective& objective);

// 100 * (ref - cand) / ref for one class; 0 when both are 0. Throws
// UndefinedReduction when ref is 0 and cand is not.
double Reduction(const ResourceMetrics& reference,
                 const ResourceMetrics& candidate, std::string_view cls);

struct SourceFile {
  std::string path;  // relative to the design directory, e.g. src/top.v
  std::string text;
  bool operator==(const SourceFile&) const = default;
};

struct DesignUnit {
  std::string name;
  std::vector<SourceFile> source_files;
  std::string top_module;
  std::vector<SourceFile> testbench_files;
  std::optional<ResourceMetrics> reference_metrics;
  // Per-design override of the global pass/fail rules.
  std::optional<VerdictRules> verdict_rules;

  // All source texts in order; a single file is returned verbatim.
  std::string CombinedSource() const;
  std::vector<std::string_view> SourceTexts() const;
  bool operator==(const DesignUnit&) const = default;
};

// Variant 0 is the reference implementation.
struct Variant {
  std::int64_t id = 0;
  std::string source_text;
  int iteration = 0;  // 0 for the reference, >= 1 otherwise
  VerificationVerdict verdict;
  std::optional<ResourceMetrics> metrics;
  std::optional<int> plan_ref;

  bool is_reference() const { return id == 0; }
  // Verified and measured.
  bool usable() const { return verdict.passed() && metrics.has_value(); }
  // Throws InvalidArgument when metrics are attached to unverified code.
  void CheckInvariants() const;
  bool operator==(const Variant&) const = default;
};

struct HierarchyInstance;

struct HierarchyNode {
  std::string module_name;
  std::vector<HierarchyInstance> instances;

  std::size_t NodeCount() const;
  std::size_t EdgeCount() const;
  std::size_t Depth() const;
  bool operator==(const HierarchyNode&) const;
};

struct HierarchyInstance {
  std::string instance_name;
  HierarchyNode child;
  bool operator==(const HierarchyInstance&) const = default;
};

// Builds the instantiation tree. Only modules declared in `sources` become
// nodes; instances of undeclared modules (vendor primitives, black boxes) are
// dropped. With no explicit top, the unique uninstantiated module is used.
HierarchyNode ExtractHierarchy(std::span<const std::string_view> sources,
                               std::optional<std::string_view> top = {});

// The unique declared module not instantiated by any other module.
std::string ResolveTopModule(std::span<const std::string_view> sources);

// Loads <root>/designs/<name>/.
DesignUnit LoadDesign(const std::filesystem::path& workspace_root,
                      std::string_view design_name);
// Loads a design directory directly (src/, tb/, optional design.json).
DesignUnit LoadDesignDir(const std::filesystem::path& dir,
                         std::string_view design_name);
// Writes the unit to <root>/designs/<name>/ in the layout LoadDesign reads.
void WriteDesign(const std::filesystem::path& workspace_root,
                 const DesignUnit& unit);

void to_json(nlohmann::json& j, const ResourceMetrics& m);
void from_json(const nlohmann::json& j, ResourceMetrics& m);
void to_json(nlohmann::json& j, const Objective& o);
void from_json(const nlohmann::json& j, Objective& o);
void to_json(nlohmann::json& j, const HierarchyNode& n);
void to_json(nlohmann::json& j, const Variant& v);
void from_json(const nlohmann::json& j, Variant& v);

}  // namespace cradle

#endif  // CRADLE_DESIGN_HPP_

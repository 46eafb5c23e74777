#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/glossary.hpp"
#include "rbt/labeled_input.hpp"

namespace rbt::scene {

struct Vertex {
  std::string id;
  std::string cls;
};

struct Triple {
  std::string src;
  std::string rel;
  std::string dst;

  auto operator<=>(const Triple&) const = default;
};

class SceneGraph {
 public:
  SceneGraph(std::string ego, std::vector<Vertex> vertices, std::vector<Triple> edges);

  static SceneGraph from_json(const nlohmann::json& doc);
  static SceneGraph parse(std::string_view json_text);
  static SceneGraph load(const std::filesystem::path& path);

  const std::string& ego() const noexcept { return ego_; }
  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  const std::vector<Triple>& edges() const noexcept { return edges_; }
  const std::string& class_of(std::string_view id) const;

 private:
  std::string ego_;
  std::vector<Vertex> vertices_;
  std::vector<Triple> edges_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class Direction { kForward, kReverse };

struct Step {
  Triple triple;
  Direction dir = Direction::kForward;

  const std::string& from() const { return dir == Direction::kForward ? triple.src : triple.dst; }
  const std::string& to() const { return dir == Direction::kForward ? triple.dst : triple.src; }
  auto operator<=>(const Step&) const = default;
};

struct Path {
  std::vector<Step> steps;

  const std::string& terminal() const { return steps.back().to(); }
  auto operator<=>(const Path&) const = default;
};

inline constexpr std::size_t kDefaultMaxPathLength = 4;

// Every simple path from ego of 1..max_len steps, edges taken in either
// orientation. Ordered by edge-list position for determinism.
std::vector<Path> walk(const SceneGraph& sg, std::size_t max_len = kDefaultMaxPathLength);

struct StepPattern {
  std::string rel;                   // "*" matches any relation
  Direction dir = Direction::kForward;
  std::vector<std::string> classes;  // allowed classes of the step's far vertex; empty = any
};

enum class EmitSubject { kTerminal, kEgo };

// A path pattern and the phrase it emits. Templates may use {rN}, {cN}, {vN}
// for the relation of step N, and the class and id of the vertex reached by
// step N ({c0}/{v0} name the ego).
struct PathRule {
  std::string id;
  std::vector<StepPattern> pattern;
  std::string emit;
  EmitSubject subject = EmitSubject::kTerminal;
};

struct RuleSet {
  std::vector<PathRule> rules;
  // Scene-graph vertex class -> glossary entity class ("car" -> "vehicle").
  std::map<std::string, std::string> entity_classes;

  std::size_t max_pattern_length() const;
  const std::string& entity_class(const std::string& scene_class) const;

  static RuleSet from_json(const nlohmann::json& doc);
  static RuleSet parse(std::string_view json_text);
  static RuleSet load(const std::filesystem::path& path);
};

struct Emission {
  std::string entity;
  std::string term;

  auto operator<=>(const Emission&) const = default;
};

bool matches(const PathRule& rule, const Path& path, const SceneGraph& sg);

// Emissions of every rule on every path it matches. Phrases are resolved
// against the glossary; a slot or phrase that cannot be resolved is an
// UnresolvablePhraseSlot error.
std::set<Emission> apply_rules(const std::vector<Path>& paths, const RuleSet& rules, const SceneGraph& sg,
                               const Glossary& g);

// Walk plus rules, merged per entity. Every vertex becomes an entity (with its
// class mapped through the rule set); the ego is always present.
LabeledInput label_scene(const SceneGraph& sg, const RuleSet& rules, const Glossary& g, std::string input_ref = {},
                         std::size_t max_len = 0);

}  // namespace rbt::scene

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbt/formula.hpp"
#include "rbt/glossary.hpp"

// Structured-natural-language requirements: "If <precondition>, then the LC
// shall <postcondition>." Preconditions are lists of entity-quantified clauses
// over glossary terms; postconditions are formulas over output predicates.
namespace rbt::snl {

enum class Polarity { kExists, kNone };

struct Subject {
  SubjectKind kind = SubjectKind::kSole;
  std::string entity_class;  // "subject", "ego" or the named class

  static Subject sole() { return {SubjectKind::kSole, std::string(kSoleClass)}; }
  static Subject ego() { return {SubjectKind::kEgo, std::string(kEgoClass)}; }
  static Subject of_class(std::string cls) { return {SubjectKind::kEntityClass, std::move(cls)}; }

  friend bool operator==(const Subject&, const Subject&) = default;
};

struct Clause {
  Polarity polarity = Polarity::kExists;
  Subject subject;
  TermFormula body = TermFormula::atom("");

  friend bool operator==(const Clause&, const Clause&) = default;
};

enum class Connective { kAnd, kOr };

struct Precondition {
  Connective connective = Connective::kAnd;
  std::vector<Clause> clauses;

  friend bool operator==(const Precondition&, const Precondition&) = default;
};

struct Requirement {
  std::string id;
  std::string source_text;
  Precondition precondition;
  TermFormula postcondition = TermFormula::atom("");
  std::optional<std::string> provenance;
};

// Same precondition and postcondition ASTs; ids and source text are ignored.
bool same_logic(const Requirement& a, const Requirement& b);

Precondition parse_precondition(const Glossary& g, std::string_view text);
TermFormula parse_postcondition(const Glossary& g, std::string_view text);

// Accepts the full template ("If ..., then the LC shall ...").
Requirement parse_requirement(const Glossary& g, std::string_view text, std::string id = {});
// Accepts the two fragments separately.
Requirement parse_requirement_fragments(const Glossary& g, std::string_view precondition,
                                        std::string_view postcondition, std::string id = {},
                              std::optional<std::string> provenance = std::nullopt);

std::string render_precondition(const Glossary& g, const Precondition& pre);
std::string render_postcondition(const Glossary& g, const TermFormula& post);
// Full if-then-shall sentence.
std::string render(const Glossary& g, const Requirement& r);

std::string to_string(const Precondition& pre);

// Requirements file: JSON list of {"id","precondition","postcondition",
// "provenance"} objects or full-template strings.
std::vector<Requirement> load_requirements(const Glossary& g, const std::filesystem::path& path);
std::vector<Requirement> parse_requirements(const Glossary& g, std::string_view json_text);

const Requirement& find_requirement(const std::vector<Requirement>& reqs, std::string_view id);

}  // namespace rbt::snl

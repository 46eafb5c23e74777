#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/formula.hpp"

namespace rbt {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Half-open interval [lower, upper). Units are carried verbatim.
struct Band {
  double lower = -kUnbounded;
  double upper = kUnbounded;
  std::string unit;

  bool contains(double v) const noexcept { return v >= lower && v < upper; }
};

enum class GroupKind { kDisjointUnordered, kOrderedBands };

struct TermGroup {
  std::string id;
  GroupKind kind = GroupKind::kDisjointUnordered;
  std::vector<std::string> members;
  std::vector<Band> bands;  // parallel to members for ordered bands
  // Surface words accepted as the unit in range phrases ("meters" for "m").
  std::vector<std::string> unit_words;
  // Morphometric measure this group partitions ("thickness", "slant", "height").
  std::optional<std::string> measure;

  bool ordered() const noexcept { return kind == GroupKind::kOrderedBands; }
};

struct GlossaryTerm {
  std::string id;
  std::string phrase;
  std::optional<std::string> group;
  std::optional<std::string> entity_class;
  std::vector<std::string> aliases;
  // Text substituted into the default VQA prompt; falls back to phrase.
  std::optional<std::string> prompt_phrase;
  // Full prompt override; "{term}" is replaced by the prompt phrase.
  std::optional<std::string> prompt_template;
};

enum class PredicateKind { kClassEquals, kClassInTaxonomy, kRegressionCompare };
enum class Comparator { kGt, kGe, kLt, kLe, kEq };

std::string_view to_string(Comparator c);
bool compare(double lhs, Comparator c, double rhs);

struct OutputPredicate {
  std::string phrase;
  std::vector<std::string> aliases;
  PredicateKind kind = PredicateKind::kClassEquals;
  std::string class_label;    // kClassEquals
  std::string taxonomy_root;  // kClassInTaxonomy
  std::string field;          // kRegressionCompare
  Comparator comparator = Comparator::kGt;
  double threshold = 0.0;
  // Steering-style sign convention the comparison was written in; when the
  // output schema declares the opposite convention, the value is negated.
  std::optional<bool> right_positive;
};

enum class SubjectKind { kEgo, kSole, kEntityClass };

// Entity class used for sole-entity datasets and for the ego vehicle.
inline constexpr std::string_view kSoleClass = "subject";
inline constexpr std::string_view kEgoClass = "ego";

struct SubjectNoun {
  std::string noun;  // normalized, may span several words
  SubjectKind kind = SubjectKind::kSole;
  std::string entity_class;
};

enum class RangeMode { kWithin, kBeyond, kBetween };

class Glossary {
 public:
  Glossary() = default;

  static Glossary from_json(const nlohmann::json& doc);
  static Glossary parse(std::string_view json_text);
  static Glossary load(const std::filesystem::path& path);

  const std::vector<GlossaryTerm>& terms() const noexcept { return terms_; }
  const std::vector<TermGroup>& groups() const noexcept { return groups_; }
  const std::vector<OutputPredicate>& predicates() const noexcept { return predicates_; }
  const std::vector<SubjectNoun>& subjects() const noexcept { return subjects_; }

  const GlossaryTerm* find_term(std::string_view id) const;
  const GlossaryTerm& term(std::string_view id) const;  // throws kUnknownTermId
  const TermGroup* find_group(std::string_view id) const;
  const TermGroup* group_of(std::string_view term_id) const;
  const TermGroup* group_for_measure(std::string_view measure) const;
  const OutputPredicate* find_predicate(std::string_view phrase) const;

  // Exact (normalized, case-insensitive) match on a canonical phrase or alias.
  const GlossaryTerm* lookup_phrase(std::string_view text) const;

  struct TermMatch {
    const GlossaryTerm* term;
    std::size_t length;  // tokens consumed
  };
  struct PredicateMatch {
    const OutputPredicate* predicate;
    std::size_t length;
  };
  struct SubjectMatch {
    const SubjectNoun* subject;
    std::size_t length;
  };

  // Longest registered phrase that is a prefix of `tokens`.
  std::optional<TermMatch> match_term(std::span<const std::string> tokens) const;
  std::optional<PredicateMatch> match_predicate(std::span<const std::string> tokens) const;
  std::optional<SubjectMatch> match_subject(std::span<const std::string> tokens) const;

  // Ordered-band group whose unit (or unit word) is `unit_word`.
  const TermGroup* group_for_unit(std::string_view unit_word) const;
  std::optional<std::size_t> band_index(const TermGroup& group, double value) const;

  // Disjunction of the members of an ordered-band group whose band lies in the
  // requested range. Bounds must fall on band edges.
  TermFormula expand_range(const TermGroup& group, RangeMode mode,
                           std::span<const double> bounds) const;

  // Noun used when rendering sole-entity clauses ("digit"); empty renders "The".
  const std::string& sole_noun() const noexcept { return sole_noun_; }
  const SubjectNoun* subject_for_class(std::string_view entity_class) const;

 private:
  void index();

  std::vector<GlossaryTerm> terms_;
  std::vector<TermGroup> groups_;
  std::vector<OutputPredicate> predicates_;
  std::vector<SubjectNoun> subjects_;
  std::string sole_noun_;

  std::unordered_map<std::string, std::size_t> term_by_id_;
  std::unordered_map<std::string, std::size_t> term_by_phrase_;
  std::unordered_map<std::string, std::size_t> group_by_id_;
  std::unordered_map<std::string, std::size_t> group_by_term_;
  std::unordered_map<std::string, std::size_t> predicate_by_phrase_;
  std::unordered_map<std::string, std::size_t> subject_by_noun_;
  std::size_t max_term_words_ = 0;
  std::size_t max_predicate_words_ = 0;
  std::size_t max_subject_words_ = 0;
};

}  // namespace rbt

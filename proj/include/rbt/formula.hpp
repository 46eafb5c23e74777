#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace rbt {

// Propositional formula over glossary-term ids (preconditions) or output
// predicate phrases (postconditions).
class TermFormula {
 public:
  enum class Kind { kAtom, kAnd, kOr, kNot };

  static TermFormula atom(std::string id);
  // And/Or/Not build normalized nodes: nested same-kind nodes are flattened,
  // one-element lists collapse to their child, and double negation cancels.
  static TermFormula all_of(std::vector<TermFormula> children);
  static TermFormula any_of(std::vector<TermFormula> children);
  static TermFormula negate(TermFormula child);

  Kind kind() const noexcept { return kind_; }
  bool is_atom() const noexcept { return kind_ == Kind::kAtom; }
  const std::string& atom_id() const noexcept { return atom_; }
  const std::vector<TermFormula>& children() const noexcept { return children_; }

  bool evaluate(const std::function<bool(const std::string&)>& valuation) const;
  void collect_atoms(std::set<std::string>& out) const;

  // Compact debugging form, e.g. And(a,Or(b,c),Not(d)).
  std::string to_string() const;

  friend bool operator==(const TermFormula&, const TermFormula&) = default;

 private:
  TermFormula() = default;
  static TermFormula join(Kind kind, std::vector<TermFormula> children);

  Kind kind_ = Kind::kAtom;
  std::string atom_;
  std::vector<TermFormula> children_;
};

}  // namespace rbt

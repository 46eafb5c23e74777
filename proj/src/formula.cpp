#include "rbt/formula.hpp"

#include "rbt/error.hpp"

namespace rbt {

TermFormula TermFormula::atom(std::string id) {
  TermFormula f;
  f.kind_ = Kind::kAtom;
  f.atom_ = std::move(id);
  return f;
}

TermFormula TermFormula::join(Kind kind, std::vector<TermFormula> children) {
  if (children.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "connective with no operands");
  }
  std::vector<TermFormula> flat;
  flat.reserve(children.size());
  for (auto& child : children) {
    if (child.kind_ == kind) {
      for (auto& grandchild : child.children_) flat.push_back(std::move(grandchild));
    } else {
      flat.push_back(std::move(child));
    }
  }
  if (flat.size() == 1) return std::move(flat.front());
  TermFormula f;
  f.kind_ = kind;
  f.children_ = std::move(flat);
  return f;
}

TermFormula TermFormula::all_of(std::vector<TermFormula> children) {
  return join(Kind::kAnd, std::move(children));
}

TermFormula TermFormula::any_of(std::vector<TermFormula> children) {
  return join(Kind::kOr, std::move(children));
}

TermFormula TermFormula::negate(TermFormula child) {
  if (child.kind_ == Kind::kNot) return std::move(child.children_.front());
  TermFormula f;
  f.kind_ = Kind::kNot;
  f.children_.push_back(std::move(child));
  return f;
}

bool TermFormula::evaluate(const std::function<bool(const std::string&)>& valuation) const {
  switch (kind_) {
    case Kind::kAtom:
      return valuation(atom_);
    case Kind::kNot:
      return !children_.front().evaluate(valuation);
    case Kind::kAnd:
      for (const auto& c : children_) {
        if (!c.evaluate(valuation)) return false;
      }
      return true;
    case Kind::kOr:
      for (const auto& c : children_) {
        if (c.evaluate(valuation)) return true;
      }
      return false;
  }
  return false;
}

void TermFormula::collect_atoms(std::set<std::string>& out) const {
  if (kind_ == Kind::kAtom) {
    out.insert(atom_);
    return;
  }
  for (const auto& c : children_) c.collect_atoms(out);
}

std::string TermFormula::to_string() const {
  if (kind_ == Kind::kAtom) return atom_;
  std::string out = kind_ == Kind::kAnd ? "And(" : kind_ == Kind::kOr ? "Or(" : "Not(";
  for (std::size_t i = 0; i < children_.size(); ++i) {
    if (i) out += ',';
    out += children_[i].to_string();
  }
  out += ')';
  return out;
}

}  // namespace rbt

#include "rbt/glossary.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "rbt/error.hpp"
#include "rbt/text.hpp"

namespace rbt {

using nlohmann::json;

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::kGt: return ">";
    case Comparator::kGe: return ">=";
    case Comparator::kLt: return "<";
    case Comparator::kLe: return "<=";
    case Comparator::kEq: return "=";
  }
  return "?";
}

bool compare(double lhs, Comparator c, double rhs) {
  switch (c) {
    case Comparator::kGt: return lhs > rhs;
    case Comparator::kGe: return lhs >= rhs;
    case Comparator::kLt: return lhs < rhs;
    case Comparator::kLe: return lhs <= rhs;
    case Comparator::kEq: return lhs == rhs;
  }
  return false;
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedFile, what); }

std::string get_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) malformed(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::optional<std::string> get_optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) malformed(std::string("field '") + key + "' must be a list");
  for (const auto& v : *it) {
    if (!v.is_string()) malformed(std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

double get_bound(const json& band, const char* key, double unbounded) {
  auto it = band.find(key);
  if (it == band.end() || it->is_null()) return unbounded;
  if (!it->is_number()) malformed(std::string("band bound '") + key + "' must be numeric");
  return it->get<double>();
}

Comparator parse_comparator(const std::string& s) {
  if (s == ">") return Comparator::kGt;
  if (s == ">=" || s == "≥") return Comparator::kGe;
  if (s == "<") return Comparator::kLt;
  if (s == "<=" || s == "≤") return Comparator::kLe;
  if (s == "=" || s == "==") return Comparator::kEq;
  malformed("unknown comparator '" + s + "'");
}

GroupKind parse_group_kind(const std::string& s) {
  if (s == "disjoint-unordered") return GroupKind::kDisjointUnordered;
  if (s == "disjoint-ordered-bands") return GroupKind::kOrderedBands;
  malformed("unknown group kind '" + s + "'");
}

OutputPredicate parse_predicate(const json& p) {
  OutputPredicate out;
  out.phrase = get_string(p, "phrase");
  out.aliases = get_string_list(p, "aliases");
  const auto kind = get_string(p, "kind");
  const json payload = p.value("payload", json::object());
  if (!payload.is_object()) malformed("predicate payload must be an object");
  if (kind == "class-equals") {
    out.kind = PredicateKind::kClassEquals;
    out.class_label = get_string(payload, "label");
  } else if (kind == "class-in-taxonomy") {
    out.kind = PredicateKind::kClassInTaxonomy;
    out.taxonomy_root = get_string(payload, "root");
  } else if (kind == "regression-compare") {
    out.kind = PredicateKind::kRegressionCompare;
    out.field = get_string(payload, "field");
    out.comparator = parse_comparator(get_string(payload, "comparator"));
    auto t = payload.find("threshold");
    if (t == payload.end() || !t->is_number()) malformed("regression predicate needs numeric threshold");
    out.threshold = t->get<double>();
    if (auto rp = payload.find("right_positive"); rp != payload.end() && rp->is_boolean()) {
      out.right_positive = rp->get<bool>();
    }
  } else {
    malformed("unknown predicate kind '" + kind + "'");
  }
  return out;
}

SubjectKind parse_subject_kind(const std::string& s) {
  if (s == "ego") return SubjectKind::kEgo;
  if (s == "sole") return SubjectKind::kSole;
  if (s == "class") return SubjectKind::kEntityClass;
  malformed("unknown subject kind '" + s + "'");
}

}  // namespace

Glossary Glossary::from_json(const json& doc) {
  if (!doc.is_object()) malformed("glossary must be a JSON object");
  Glossary g;
  try {
    for (const auto& t : doc.value("terms", json::array())) {
      GlossaryTerm term;
      term.id = get_string(t, "id");
      term.phrase = get_string(t, "phrase");
      term.aliases = get_string_list(t, "aliases");
      term.group = get_optional_string(t, "group");
      term.entity_class = get_optional_string(t, "entity_class");
      term.prompt_phrase = get_optional_string(t, "prompt_phrase");
      term.prompt_template = get_optional_string(t, "prompt");
      g.terms_.push_back(std::move(term));
    }
    for (const auto& gr : doc.value("groups", json::array())) {
      TermGroup group;
      group.id = get_string(gr, "id");
      group.kind = parse_group_kind(get_string(gr, "kind"));
      group.members = get_string_list(gr, "members");
      group.unit_words = get_string_list(gr, "unit_words");
      group.measure = get_optional_string(gr, "measure");
      for (const auto& b : gr.value("bands", json::array())) {
        Band band;
        band.lower = get_bound(b, "lower", -kUnbounded);
        band.upper = get_bound(b, "upper", kUnbounded);
        band.unit = b.value("unit", std::string{});
        group.bands.push_back(std::move(band));
      }
      g.groups_.push_back(std::move(group));
    }
    for (const auto& p : doc.value("output_predicates", json::array())) {
      g.predicates_.push_back(parse_predicate(p));
    }
    for (const auto& s : doc.value("subjects", json::array())) {
      SubjectNoun subject;
      subject.noun = text::normalize(get_string(s, "noun"));
      subject.kind = parse_subject_kind(get_string(s, "kind"));
      switch (subject.kind) {
        case SubjectKind::kSole: subject.entity_class = std::string(kSoleClass); break;
        case SubjectKind::kEgo: subject.entity_class = std::string(kEgoClass); break;
        case SubjectKind::kEntityClass: subject.entity_class = get_string(s, "class"); break;
      }
      g.subjects_.push_back(std::move(subject));
    }
  } catch (const json::exception& e) {
    malformed(std::string("glossary JSON: ") + e.what());
  }
  g.index();
  return g;
}

Glossary Glossary::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed(std::string("glossary is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

Glossary Glossary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open glossary " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Glossary::index() {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    if (t.id.empty()) malformed("term with empty id");
    if (!term_by_id_.emplace(t.id, i).second) malformed("duplicate term id '" + t.id + "'");
    std::vector<std::string> surfaces{t.phrase};
    surfaces.insert(surfaces.end(), t.aliases.begin(), t.aliases.end());
    for (const auto& s : surfaces) {
      auto key = text::normalize(s);
      if (key.empty()) malformed("term '" + t.id + "' has an empty phrase");
      auto [it, inserted] = term_by_phrase_.emplace(key, i);
      if (!inserted && it->second != i) {
        throw Error(ErrorCode::kDuplicatePhrase,
                    "'" + key + "' used by '" + terms_[it->second].id + "' and '" + t.id + "'");
      }
      max_term_words_ = std::max(max_term_words_, text::words(key).size());
    }
  }

  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& g = groups_[gi];
    if (!group_by_id_.emplace(g.id, gi).second) malformed("duplicate group id '" + g.id + "'");
    std::set<std::string> seen;
    for (const auto& m : g.members) {
      if (!seen.insert(m).second) malformed("group '" + g.id + "' lists '" + m + "' twice");
      auto t = term_by_id_.find(m);
      if (t == term_by_id_.end()) {
        throw Error(ErrorCode::kUnknownGroupMember, "group '" + g.id + "' member '" + m + "'");
      }
      if (!group_by_term_.emplace(m, gi).second) {
        malformed("term '" + m + "' belongs to more than one group");
      }
      const auto& declared = terms_[t->second].group;
      if (declared && *declared != g.id) {
        throw Error(ErrorCode::kUnknownGroupMember,
                    "term '" + m + "' declares group '" + *declared + "' but is listed in '" + g.id + "'");
      }
    }
    if (g.ordered()) {
      if (g.bands.size() != g.members.size()) {
        malformed("group '" + g.id + "' needs one band per member");
      }
      for (std::size_t k = 0; k < g.bands.size(); ++k) {
        const auto& b = g.bands[k];
        if (!(b.lower < b.upper)) {
          throw Error(ErrorCode::kOverlappingBands, "group '" + g.id + "' band " + std::to_string(k) + " is empty");
        }
        if (k > 0 && g.bands[k - 1].upper != b.lower) {
          throw Error(ErrorCode::kOverlappingBands,
                      "group '" + g.id + "' bands " + std::to_string(k - 1) + " and " +
                          std::to_string(k) + " are not contiguous");
        }
      }
      if (g.unit_words.empty() && !g.bands.empty() && !g.bands.front().unit.empty()) {
        g.unit_words.push_back(g.bands.front().unit);
      }
      for (auto& w : g.unit_words) w = text::normalize(w);
    } else if (!g.bands.empty()) {
      malformed("unordered group '" + g.id + "' must not declare bands");
    }
  }
  for (const auto& t : terms_) {
    if (t.group && !group_by_term_.contains(t.id)) {
      throw Error(ErrorCode::kUnknownGroupMember,
                  "term '" + t.id + "' declares group '" + *t.group + "' which does not list it");
    }
  }

  for (std::size_t i = 0; i < predicates_.size(); ++i) {
    std::vector<std::string> surfaces{predicates_[i].phrase};
    surfaces.insert(surfaces.end(), predicates_[i].aliases.begin(), predicates_[i].aliases.end());
    for (const auto& s : surfaces) {
      auto key = text::normalize(s);
      auto [it, inserted] = predicate_by_phrase_.emplace(key, i);
      if (!inserted && it->second != i) {
        throw Error(ErrorCode::kDuplicatePhrase, "output predicate phrase '" + key + "' is not unique");
      }
      max_predicate_words_ = std::max(max_predicate_words_, text::words(key).size());
    }
    predicates_[i].phrase = text::normalize(predicates_[i].phrase);
  }

  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    const auto& s = subjects_[i];
    if (!subject_by_noun_.emplace(s.noun, i).second) malformed("duplicate subject noun '" + s.noun + "'");
    max_subject_words_ = std::max(max_subject_words_, text::words(s.noun).size());
    if (s.kind == SubjectKind::kSole && sole_noun_.empty()) sole_noun_ = s.noun;
  }
}

const GlossaryTerm* Glossary::find_term(std::string_view id) const {
  auto it = term_by_id_.find(std::string(id));
  return it == term_by_id_.end() ? nullptr : &terms_[it->second];
}

const GlossaryTerm& Glossary::term(std::string_view id) const {
  if (const auto* t = find_term(id)) return *t;
  throw Error(ErrorCode::kUnknownTermId, "term '" + std::string(id) + "'");
}

const TermGroup* Glossary::find_group(std::string_view id) const {
  auto it = group_by_id_.find(std::string(id));
  return it == group_by_id_.end() ? nullptr : &groups_[it->second];
}

const TermGroup* Glossary::group_of(std::string_view term_id) const {
  auto it = group_by_term_.find(std::string(term_id));
  return it == group_by_term_.end() ? nullptr : &groups_[it->second];
}

const TermGroup* Glossary::group_for_measure(std::string_view measure) const {
  for (const auto& g : groups_) {
    if (g.ordered() && g.measure && *g.measure == measure) return &g;
  }
  return nullptr;
}

const OutputPredicate* Glossary::find_predicate(std::string_view phrase) const {
  auto it = predicate_by_phrase_.find(text::normalize(phrase));
  return it == predicate_by_phrase_.end() ? nullptr : &predicates_[it->second];
}

const GlossaryTerm* Glossary::lookup_phrase(std::string_view phrase) const {
  auto it = term_by_phrase_.find(text::normalize(phrase));
  return it == term_by_phrase_.end() ? nullptr : &terms_[it->second];
}

namespace {

template <typename Map>
std::optional<std::pair<std::size_t, std::size_t>> longest_prefix(const Map& index, std::size_t max_words,
                                                                   std::span<const std::string> tokens) {
  std::size_t limit = std::min(max_words, tokens.size());
  for (std::size_t n = 0; n < limit; ++n) {
    if (tokens[n] == ",") {
      limit = n;
      break;
    }
  }
  for (std::size_t n = limit; n >= 1; --n) {
    std::string key = tokens[0];
    for (std::size_t k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[k];
    }
    if (auto it = index.find(key); it != index.end()) return std::pair{it->second, n};
  }
  return std::nullopt;
}

}  // namespace

std::optional<Glossary::TermMatch> Glossary::match_term(std::span<const std::string> tokens) const {
  if (auto m = longest_prefix(term_by_phrase_, max_term_words_, tokens)) {
    return TermMatch{&terms_[m->first], m->second};
  }
  return std::nullopt;
}

std::optional<Glossary::PredicateMatch> Glossary::match_predicate(std::span<const std::string> tokens) const {
  if (auto m = longest_prefix(predicate_by_phrase_, max_predicate_words_, tokens)) {
    return PredicateMatch{&predicates_[m->first], m->second};
  }
  return std::nullopt;
}

std::optional<Glossary::SubjectMatch> Glossary::match_subject(std::span<const std::string> tokens) const {
  if (auto m = longest_prefix(subject_by_noun_, max_subject_words_, tokens)) {
    return SubjectMatch{&subjects_[m->first], m->second};
  }
  return std::nullopt;
}

const SubjectNoun* Glossary::subject_for_class(std::string_view entity_class) const {
  for (const auto& s : subjects_) {
    if (s.entity_class == entity_class) return &s;
  }
  return nullptr;
}

const TermGroup* Glossary::group_for_unit(std::string_view unit_word) const {
  const TermGroup* found = nullptr;
  for (const auto& g : groups_) {
    if (!g.ordered()) continue;
    if (std::find(g.unit_words.begin(), g.unit_words.end(), unit_word) == g.unit_words.end()) continue;
    if (found) {
      throw Error(ErrorCode::kMalformedFile,
                  "unit '" + std::string(unit_word) + "' is shared by groups '" + found->id + "' and '" + g.id + "'");
    }
    found = &g;
  }
  return found;
}

std::optional<std::size_t> Glossary::band_index(const TermGroup& group, double value) const {
  for (std::size_t k = 0; k < group.bands.size(); ++k) {
    if (group.bands[k].contains(value)) return k;
  }
  return std::nullopt;
}

TermFormula Glossary::expand_range(const TermGroup& group, RangeMode mode,
                                   std::span<const double> bounds) const {
  if (!group.ordered()) {
    throw Error(ErrorCode::kInvalidArgument, "group '" + group.id + "' is not an ordered-band group");
  }
  const std::size_t expected = mode == RangeMode::kBetween ? 2 : 1;
  if (bounds.size() != expected) {
    throw Error(ErrorCode::kInvalidArgument, "range needs " + std::to_string(expected) + " bound(s)");
  }
  auto on_edge = [&](double v) {
    for (const auto& b : group.bands) {
      if (b.lower == v || b.upper == v) return true;
    }
    return false;
  };
  for (double v : bounds) {
    if (!on_edge(v)) {
      throw Error(ErrorCode::kBoundNotOnBandEdge,
                  text::format_number(v) + " splits a band of group '" + group.id + "'");
    }
  }
  double lo = -kUnbounded;
  double hi = kUnbounded;
  switch (mode) {
    case RangeMode::kWithin: hi = bounds[0]; break;
    case RangeMode::kBeyond: lo = bounds[0]; break;
    case RangeMode::kBetween:
      lo = bounds[0];
      hi = bounds[1];
      break;
  }
  std::vector<TermFormula> picked;
  for (std::size_t k = 0; k < group.bands.size(); ++k) {
    if (group.bands[k].lower >= lo && group.bands[k].upper <= hi) {
      picked.push_back(TermFormula::atom(group.members[k]));
    }
  }
  if (picked.empty()) throw Error(ErrorCode::kEmptyRange, "no band of group '" + group.id + "' lies in the range");
  return TermFormula::any_of(std::move(picked));
}

}  // namespace rbt

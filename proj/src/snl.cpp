#include "rbt/snl.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rbt/error.hpp"
#include "rbt/text.hpp"

namespace rbt::snl {

namespace {

using text::Token;

// List separators. kImplicit marks two items written back to back with no
// connective ("The single animal has no limbs"), which reads as conjunction.
enum class Sep { kComma, kAnd, kOr, kCommaAnd, kCommaOr, kImplicit };

bool conjunctive(Sep s) { return s == Sep::kAnd || s == Sep::kCommaAnd || s == Sep::kImplicit; }
bool disjunctive(Sep s) { return s == Sep::kOr || s == Sep::kCommaOr; }

struct ItemList {
  std::vector<TermFormula> items;
  std::vector<Sep> seps;  // seps[i] sits between items[i] and items[i + 1]
};

constexpr std::array<std::string_view, 7> kStopWords{"the", "is", "a", "an", "has", "have", "are"};

bool is_stop_word(std::string_view w) {
  return std::find(kStopWords.begin(), kStopWords.end(), w) != kStopWords.end();
}

bool is_determiner(std::string_view w) { return w == "the" || w == "a" || w == "an" || w == "no"; }

class Parser {
 public:
  Parser(const Glossary& g, std::string_view source) : g_(g), source_(source), tokens_(text::tokenize(source)) {
    words_.reserve(tokens_.size());
    for (const auto& t : tokens_) words_.push_back(t.text);
  }

  bool empty() const { return tokens_.empty(); }

  Precondition precondition() {
    if (tokens_.empty()) throw ParseError(ErrorCode::kEmptyPrecondition, "precondition is empty", {0, 0});

    std::vector<Clause> clauses;
    std::vector<Sep> clause_seps;
    Clause current;
    ItemList list;
    std::size_t clause_begin = pos_;
    start_clause(current, /*at_start=*/true);

    auto finish = [&] {
      if (list.items.empty()) {
        throw ParseError(ErrorCode::kEmptyPrecondition, "clause has no glossary terms", span(clause_begin, pos_));
      }
      current.body = combine(list, span(clause_begin, pos_));
      clauses.push_back(std::move(current));
      current = Clause{};
      list = ItemList{};
    };

    while (pos_ < words_.size()) {
      if (!list.items.empty()) {
        const std::size_t sep_begin = pos_;
        Sep sep = read_separator().value_or(Sep::kImplicit);
        if (pos_ >= words_.size()) {
          throw ParseError(ErrorCode::kAmbiguousConnectives, "dangling connective", span(sep_begin, pos_));
        }
        if (clause_starts_here()) {
          finish();
          clause_seps.push_back(sep);
          clause_begin = pos_;
          start_clause(current, /*at_start=*/false);
          continue;
        }
        list.seps.push_back(sep);
      }
      list.items.push_back(term_item(current.subject));
    }
    finish();

    Precondition pre;
    pre.clauses = std::move(clauses);
    pre.connective = clause_connective(clause_seps);
    return pre;
  }

  TermFormula postcondition() {
    if (tokens_.empty()) throw ParseError(ErrorCode::kEmptyPostcondition, "postcondition is empty", {0, 0});
    ItemList list;
    while (pos_ < words_.size()) {
      if (!list.items.empty()) {
        const std::size_t sep_begin = pos_;
        Sep sep = read_separator().value_or(Sep::kImplicit);
        if (pos_ >= words_.size()) {
          throw ParseError(ErrorCode::kAmbiguousConnectives, "dangling connective", span(sep_begin, pos_));
        }
        list.seps.push_back(sep);
      }
      list.items.push_back(predicate_item());
    }
    return combine(list, span(0, words_.size()));
  }

 private:
  TextSpan span(std::size_t first, std::size_t last) const {
    if (tokens_.empty()) return {0, 0};
    if (first >= tokens_.size()) return {source_.size(), source_.size()};
    last = std::max(first + 1, std::min(last, tokens_.size()));
    return {tokens_[first].begin, tokens_[last - 1].end};
  }

  const std::string& word(std::size_t ahead = 0) const {
    static const std::string kEmpty;
    return pos_ + ahead < words_.size() ? words_[pos_ + ahead] : kEmpty;
  }

  std::span<const std::string> rest(std::size_t ahead = 0) const {
    const std::size_t at = std::min(pos_ + ahead, words_.size());
    return std::span<const std::string>(words_).subspan(at);
  }

  // End of the current run of non-separator tokens, for error spans.
  std::size_t run_end(std::size_t from) const {
    std::size_t k = from;
    while (k < words_.size() && words_[k] != "," && words_[k] != "and" && words_[k] != "or") ++k;
    return std::max(k, from + 1);
  }

  std::optional<Sep> read_separator() {
    bool comma = false;
    if (word() == ",") {
      comma = true;
      ++pos_;
    }
    if (word() == "and") {
      ++pos_;
      return comma ? Sep::kCommaAnd : Sep::kAnd;
    }
    if (word() == "or") {
      ++pos_;
      return comma ? Sep::kCommaOr : Sep::kOr;
    }
    if (comma) return Sep::kComma;
    return std::nullopt;
  }

  // A determiner followed by a registered subject noun opens a new clause,
  // unless a longer glossary phrase starts at the same position.
  std::optional<Glossary::SubjectMatch> subject_here() const {
    if (!is_determiner(word())) return std::nullopt;
    auto subject = g_.match_subject(rest(1));
    if (!subject) return std::nullopt;
    if (auto term = g_.match_term(rest()); term && term->length > subject->length + 1) return std::nullopt;
    return subject;
  }

  bool clause_starts_here() const { return subject_here().has_value(); }

  void start_clause(Clause& clause, bool at_start) {
    clause = Clause{};
    if (auto m = subject_here()) {
      clause.polarity = word() == "no" ? Polarity::kNone : Polarity::kExists;
      clause.subject = {m->subject->kind, m->subject->entity_class};
      pos_ += 1 + m->length;
      return;
    }
    if (!at_start) return;
    if (word() == "the") {
      ++pos_;
      clause.subject = Subject::sole();
      return;
    }
    if (auto m = g_.match_subject(rest()); m && !g_.match_term(rest())) {
      clause.subject = {m->subject->kind, m->subject->entity_class};
      pos_ += m->length;
      return;
    }
    clause.subject = Subject::sole();
  }

  void check_class(const TermFormula& f, const Subject& subject, std::size_t begin) const {
    std::set<std::string> atoms;
    f.collect_atoms(atoms);
    for (const auto& id : atoms) {
      const auto& term = g_.term(id);
      if (term.entity_class && *term.entity_class != subject.entity_class) {
        throw ParseError(ErrorCode::kEntityClassMismatch,
                         "'" + term.phrase + "' describes " + *term.entity_class + ", not " + subject.entity_class,
                         span(begin, pos_));
      }
    }
  }

  std::optional<std::size_t> range_length() const {
    const auto& w = word();
    if (w == "within" || w == "beyond") {
      if (text::parse_number(word(1)) && g_.group_for_unit(word(2))) return 3;
    } else if (w == "between") {
      if (text::parse_number(word(1)) && word(2) == "and" && text::parse_number(word(3)) &&
          g_.group_for_unit(word(4))) {
        return 5;
      }
    }
    return std::nullopt;
  }

  TermFormula expand_range_here(std::size_t length) {
    const std::size_t begin = pos_;
    const auto& w = word();
    RangeMode mode = w == "within" ? RangeMode::kWithin : w == "beyond" ? RangeMode::kBeyond : RangeMode::kBetween;
    std::vector<double> bounds{*text::parse_number(word(1))};
    if (mode == RangeMode::kBetween) bounds.push_back(*text::parse_number(word(3)));
    const TermGroup* group = g_.group_for_unit(word(length - 1));
    pos_ += length;
    try {
      return g_.expand_range(*group, mode, bounds);
    } catch (const Error& e) {
      throw ParseError(e.code(), e.what(), span(begin, pos_));
    }
  }

  TermFormula term_item(const Subject& subject) {
    const std::size_t begin = pos_;
    bool negated = false;
    while (pos_ < words_.size()) {
      if (auto m = g_.match_term(rest())) {
        pos_ += m->length;
        auto f = TermFormula::atom(m->term->id);
        check_class(f, subject, begin);
        return negated ? TermFormula::negate(std::move(f)) : f;
      }
      if (auto len = range_length()) {
        auto f = expand_range_here(*len);
        check_class(f, subject, begin);
        return negated ? TermFormula::negate(std::move(f)) : f;
      }
      const auto& w = word();
      if (w == "not" || w == "no") {
        negated = !negated;
        ++pos_;
      } else if (w == "does" && word(1) == "not") {
        negated = !negated;
        pos_ += 2;
      } else if (is_stop_word(w)) {
        ++pos_;
      } else {
        break;
      }
    }
    const std::size_t end = run_end(pos_ < words_.size() ? pos_ : begin);
    const auto s = span(begin, end);
    throw ParseError(ErrorCode::kUnknownPhrase,
                     "no glossary term matches '" + std::string(source_.substr(s.begin, s.end - s.begin)) + "'", s);
  }

  TermFormula predicate_item() {
    const std::size_t begin = pos_;
    bool negated = false;
    while (pos_ < words_.size()) {
      if (auto m = g_.match_predicate(rest())) {
        pos_ += m->length;
        auto f = TermFormula::atom(m->predicate->phrase);
        return negated ? TermFormula::negate(std::move(f)) : f;
      }
      const auto& w = word();
      if (w == "not") {
        negated = !negated;
        ++pos_;
      } else if (w == "does" && word(1) == "not") {
        negated = !negated;
        pos_ += 2;
      } else {
        break;
      }
    }
    const auto s = span(begin, run_end(pos_ < words_.size() ? pos_ : begin));
    throw ParseError(ErrorCode::kUnknownPhrase,
                     "no output predicate matches '" + std::string(source_.substr(s.begin, s.end - s.begin)) + "'",
                     s);
  }

  // A list's final connective fixes its operator. When "and" and "or" both
  // occur, "and" splits the list into conjuncts that must each be a plain
  // or-list; any other mixture is rejected.
  TermFormula combine(ItemList& list, TextSpan where) const {
    auto& items = list.items;
    const auto& seps = list.seps;
    if (items.size() == 1) return std::move(items.front());
    const bool has_and = std::any_of(seps.begin(), seps.end(), conjunctive);
    const bool has_or = std::any_of(seps.begin(), seps.end(), disjunctive);
    if (!has_and && !has_or) {
      throw ParseError(ErrorCode::kAmbiguousConnectives, "comma list has no final 'and'/'or'", where);
    }
    if (!has_or) return TermFormula::all_of(std::move(items));
    if (!has_and) return TermFormula::any_of(std::move(items));

    std::vector<TermFormula> conjuncts;
    std::vector<TermFormula> run{std::move(items.front())};
    std::vector<Sep> run_seps;
    auto close_run = [&] {
      bool pending_comma = false;
      for (Sep s : run_seps) {
        if (s == Sep::kComma) pending_comma = true;
        if (disjunctive(s)) pending_comma = false;
      }
      if (pending_comma) {
        throw ParseError(ErrorCode::kAmbiguousConnectives, "comma list mixes 'and' and 'or'", where);
      }
      conjuncts.push_back(TermFormula::any_of(std::move(run)));
      run.clear();
      run_seps.clear();
    };
    for (std::size_t i = 0; i < seps.size(); ++i) {
      if (conjunctive(seps[i])) {
        close_run();
      } else {
        run_seps.push_back(seps[i]);
      }
      run.push_back(std::move(items[i + 1]));
    }
    close_run();
    return TermFormula::all_of(std::move(conjuncts));
  }

  Connective clause_connective(const std::vector<Sep>& seps) const {
    const bool has_and = std::any_of(seps.begin(), seps.end(), conjunctive);
    const bool has_or = std::any_of(seps.begin(), seps.end(), disjunctive);
    if (has_and && has_or) {
      throw ParseError(ErrorCode::kAmbiguousConnectives, "clauses joined by both 'and' and 'or'",
                       span(0, words_.size()));
    }
    if (!seps.empty() && !has_and && !has_or) {
      throw ParseError(ErrorCode::kAmbiguousConnectives, "clauses joined without a connective",
                       span(0, words_.size()));
    }
    return has_or ? Connective::kOr : Connective::kAnd;
  }

  const Glossary& g_;
  std::string_view source_;
  std::vector<Token> tokens_;
  std::vector<std::string> words_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Rendering

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string list_join(const std::vector<std::string>& parts, std::string_view connective, bool bare) {
  if (parts.size() == 1) return parts.front();
  if (parts.size() == 2 || bare) {
    return text::join(parts, std::string(" ") + std::string(connective) + " ");
  }
  std::string out;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) out += parts[i] + ", ";
  return out + std::string(connective) + " " + parts.back();
}

class Renderer {
 public:
  explicit Renderer(const Glossary& g) : g_(g) {}

  std::string clause(const Clause& c, bool first_clause) const {
    std::string subject;
    switch (c.subject.kind) {
      case SubjectKind::kSole:
        subject = g_.sole_noun().empty() ? "the" : "the " + g_.sole_noun();
        break;
      case SubjectKind::kEgo: {
        const auto* s = g_.subject_for_class(kEgoClass);
        subject = "the " + (s ? s->noun : std::string(kEgoClass));
        break;
      }
      case SubjectKind::kEntityClass: {
        const auto* s = g_.subject_for_class(c.subject.entity_class);
        if (!s) {
          throw Error(ErrorCode::kInvalidArgument, "no subject noun renders class '" + c.subject.entity_class + "'");
        }
        subject = s->noun;
        break;
      }
    }
    if (c.polarity == Polarity::kNone) {
      if (c.subject.kind == SubjectKind::kEntityClass) {
        subject = "no " + subject;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "negated clauses need an entity-class subject");
      }
    } else if (c.subject.kind == SubjectKind::kEntityClass) {
      const bool vowel = !subject.empty() && std::string_view("aeiou").find(subject.front()) != std::string_view::npos;
      subject = (vowel ? "an " : "a ") + subject;
    }
    if (first_clause && !subject.empty()) subject.front() = static_cast<char>(std::toupper(subject.front()));
    return subject + " " + body(c.body, /*first=*/true);
  }

  std::string predicate_formula(const TermFormula& f, bool nested = false) const {
    switch (f.kind()) {
      case TermFormula::Kind::kAtom:
        return f.atom_id();
      case TermFormula::Kind::kNot:
        if (!f.children().front().is_atom()) {
          throw Error(ErrorCode::kInvalidArgument, "only single predicates can be negated in SNL");
        }
        return "not " + f.children().front().atom_id();
      case TermFormula::Kind::kAnd:
      case TermFormula::Kind::kOr: {
        const bool is_and = f.kind() == TermFormula::Kind::kAnd;
        if (nested && is_and) throw Error(ErrorCode::kInvalidArgument, "conjunction inside a disjunction");
        std::vector<std::string> parts;
        bool has_or_child = false;
        for (const auto& c : f.children()) {
          has_or_child |= c.kind() == TermFormula::Kind::kOr;
          parts.push_back(predicate_formula(c, !is_and || nested));
        }
        return list_join(parts, is_and ? "and" : "or", is_and && has_or_child);
      }
    }
    return {};
  }

 private:
  // Phrase for `term`. Inside lists of three or more, later items drop a
  // leading "is " when the shorter form resolves to the same term.
  std::string phrase(const std::string& id, bool first, bool share_copula) const {
    const auto& t = g_.term(id);
    const std::string p = text::normalize(t.phrase);
    if (!first && share_copula && starts_with(p, "is ")) {
      const auto* same = g_.lookup_phrase(p.substr(3));
      if (same == &t) return p.substr(3);
    }
    return p;
  }

  std::string negated_phrase(const std::string& id, bool first) const {
    const auto& t = g_.term(id);
    const std::string p = text::normalize(t.phrase);
    for (std::string_view verb : {"is ", "has "}) {
      if (starts_with(p, verb)) {
        const std::string rest = p.substr(verb.size());
        if (g_.lookup_phrase(rest) == &t) {
          if (verb == "has ") return "has no " + rest;
          return (first ? "is not " : "not ") + rest;
        }
      }
    }
    return "not " + p;
  }

  // Range phrase covering a run of consecutive bands, when one exists.
  std::optional<std::string> range_text(std::span<const TermFormula> atoms) const {
    if (atoms.empty() || !atoms.front().is_atom()) return std::nullopt;
    const auto* group = g_.group_of(atoms.front().atom_id());
    if (!group || !group->ordered()) return std::nullopt;
    std::vector<std::size_t> idx;
    for (const auto& a : atoms) {
      if (!a.is_atom()) return std::nullopt;
      auto it = std::find(group->members.begin(), group->members.end(), a.atom_id());
      if (it == group->members.end()) return std::nullopt;
      idx.push_back(static_cast<std::size_t>(it - group->members.begin()));
    }
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (idx[k] != idx[k - 1] + 1) return std::nullopt;
    }
    if (group->unit_words.empty()) return std::nullopt;
    const auto& unit = group->unit_words.front();
    try {
      if (g_.group_for_unit(unit) != group) return std::nullopt;
    } catch (const Error&) {
      return std::nullopt;
    }
    const double lo = group->bands[idx.front()].lower;
    const double hi = group->bands[idx.back()].upper;
    const bool finite_lo = lo != -kUnbounded;
    const bool finite_hi = hi != kUnbounded;
    if (idx.front() == 0 && finite_hi) return "within " + text::format_number(hi) + " " + unit;
    if (idx.back() + 1 == group->members.size() && finite_lo) {
      return "beyond " + text::format_number(lo) + " " + unit;
    }
    if (finite_lo && finite_hi) {
      return "between " + text::format_number(lo) + " and " + text::format_number(hi) + " " + unit;
    }
    return std::nullopt;
  }

  // Splits a disjunction's children into list entries, folding each run of
  // two or more consecutive bands back into one range phrase.
  std::vector<std::string> or_parts(const TermFormula& f, bool first) const {
    std::vector<std::string> parts;
    const auto& kids = f.children();
    std::size_t i = 0;
    while (i < kids.size()) {
      std::size_t j = i + 1;
      if (kids[i].is_atom()) {
        const auto* group = g_.group_of(kids[i].atom_id());
        while (j < kids.size() && kids[j].is_atom() && group && g_.group_of(kids[j].atom_id()) == group &&
               range_text(std::span(kids).subspan(i, j - i + 1))) {
          ++j;
        }
      }
      std::optional<std::string> range;
      if (j - i >= 2) range = range_text(std::span(kids).subspan(i, j - i));
      const bool is_first = first && parts.empty();
      if (range) {
        parts.push_back(is_first ? "is " + *range : *range);
      } else {
        j = i + 1;
        parts.push_back(item(kids[i], is_first, kids.size() >= 3));
      }
      i = j;
    }
    return parts;
  }

  std::string item(const TermFormula& f, bool first, bool share_copula) const {
    switch (f.kind()) {
      case TermFormula::Kind::kAtom:
        return phrase(f.atom_id(), first, share_copula);
      case TermFormula::Kind::kNot: {
        const auto& inner = f.children().front();
        if (inner.is_atom()) return negated_phrase(inner.atom_id(), first);
        if (inner.kind() == TermFormula::Kind::kOr) {
          auto parts = or_parts(inner, false);
          if (parts.size() == 1) return (first ? "is not " : "not ") + parts.front();
        }
        throw Error(ErrorCode::kInvalidArgument, "cannot render negation of " + inner.to_string());
      }
      case TermFormula::Kind::kOr:
        return list_join(or_parts(f, first), "or", false);
      case TermFormula::Kind::kAnd:
        throw Error(ErrorCode::kInvalidArgument, "conjunction nested in a disjunction: " + f.to_string());
    }
    return {};
  }

  std::string body(const TermFormula& f, bool first) const {
    if (f.kind() != TermFormula::Kind::kAnd) return item(f, first, false);
    std::vector<std::string> parts;
    bool bare = false;
    for (const auto& c : f.children()) {
      if (c.kind() == TermFormula::Kind::kOr && or_parts(c, false).size() > 1) bare = true;
      parts.push_back(item(c, parts.empty() && first, f.children().size() >= 3));
    }
    return list_join(parts, "and", bare);
  }

  const Glossary& g_;
};

std::string lower_first(std::string s) {
  if (!s.empty()) s.front() = static_cast<char>(std::tolower(s.front()));
  return s;
}

}  // namespace

bool same_logic(const Requirement& a, const Requirement& b) {
  return a.precondition == b.precondition && a.postcondition == b.postcondition;
}

Precondition parse_precondition(const Glossary& g, std::string_view text) { return Parser(g, text).precondition(); }

TermFormula parse_postcondition(const Glossary& g, std::string_view text) { return Parser(g, text).postcondition(); }

Requirement parse_requirement_fragments(const Glossary& g, std::string_view precondition,
                                        std::string_view postcondition, std::string id,
                                        std::optional<std::string> provenance) {
  Requirement r;
  r.id = std::move(id);
  r.source_text = "If " + lower_first(std::string(precondition)) + ", then the LC shall " + std::string(postcondition);
  r.precondition = parse_precondition(g, precondition);
  r.postcondition = parse_postcondition(g, postcondition);
  r.provenance = std::move(provenance);
  return r;
}

Requirement parse_requirement(const Glossary& g, std::string_view text, std::string id) {
  const auto tokens = text::tokenize(text);
  if (tokens.empty() || tokens.front().text != "if") {
    throw ParseError(ErrorCode::kEmptyPrecondition, "expected 'If <precondition>, then the LC shall ...'",
                     {0, text.size()});
  }
  constexpr std::array<std::string_view, 4> kShall{"then", "the", "lc", "shall"};
  for (std::size_t k = 1; k + kShall.size() <= tokens.size(); ++k) {
    bool hit = true;
    for (std::size_t j = 0; j < kShall.size(); ++j) hit = hit && tokens[k + j].text == kShall[j];
    if (!hit) continue;
    std::size_t pre_end = k;
    if (tokens[k - 1].text == ",") --pre_end;
    const std::size_t pre_from = tokens[1].begin;
    const std::size_t pre_to = pre_end > 1 ? tokens[pre_end - 1].end : pre_from;
    const std::size_t post_from = k + kShall.size() < tokens.size() ? tokens[k + kShall.size()].begin : text.size();
    auto r = parse_requirement_fragments(g, text.substr(pre_from, pre_to - pre_from), text.substr(post_from), std::move(id));
    r.source_text = std::string(text);
    return r;
  }
  throw ParseError(ErrorCode::kEmptyPostcondition, "missing 'then the LC shall'", {0, text.size()});
}

std::string render_precondition(const Glossary& g, const Precondition& pre) {
  Renderer r(g);
  std::vector<std::string> parts;
  for (const auto& c : pre.clauses) parts.push_back(r.clause(c, parts.empty()));
  if (parts.size() == 1) return parts.front();
  const std::string conn = pre.connective == Connective::kAnd ? "and" : "or";
  if (parts.size() == 2) return parts[0] + ", " + conn + " " + parts[1];
  return list_join(parts, conn, false);
}

std::string render_postcondition(const Glossary& g, const TermFormula& post) {
  return Renderer(g).predicate_formula(post);
}

std::string render(const Glossary& g, const Requirement& r) {
  return "If " + lower_first(render_precondition(g, r.precondition)) + ", then the LC shall " +
         render_postcondition(g, r.postcondition) + ".";
}

std::string to_string(const Precondition& pre) {
  std::string out;
  for (std::size_t i = 0; i < pre.clauses.size(); ++i) {
    if (i) out += pre.connective == Connective::kAnd ? " & " : " | ";
    const auto& c = pre.clauses[i];
    out += c.polarity == Polarity::kExists ? "Exists[" : "None[";
    out += c.subject.entity_class + "](" + c.body.to_string() + ")";
  }
  return out;
}

std::vector<Requirement> parse_requirements(const Glossary& g, std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("requirements file: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kMalformedFile, "requirements file must be a JSON list");
  std::vector<Requirement> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& row = doc[i];
    const std::string fallback_id = "R" + std::to_string(i + 1);
    if (row.is_string()) {
      out.push_back(parse_requirement(g, row.get<std::string>(), fallback_id));
      continue;
    }
    if (!row.is_object()) throw Error(ErrorCode::kMalformedFile, "requirement rows must be objects or strings");
    const std::string id = row.contains("id") && row["id"].is_string() ? row["id"].get<std::string>() : fallback_id;
    std::optional<std::string> provenance;
    if (row.contains("provenance") && row["provenance"].is_string()) provenance = row["provenance"].get<std::string>();
    if (row.contains("text") && row["text"].is_string()) {
      auto r = parse_requirement(g, row["text"].get<std::string>(), id);
      r.provenance = provenance;
      out.push_back(std::move(r));
      continue;
    }
    if (!row.contains("precondition") || !row["precondition"].is_string() || !row.contains("postcondition") ||
        !row["postcondition"].is_string()) {
      throw Error(ErrorCode::kMalformedFile, "requirement '" + id + "' needs precondition and postcondition strings");
    }
    out.push_back(parse_requirement_fragments(g, row["precondition"].get<std::string>(), row["postcondition"].get<std::string>(),
                                    id, provenance));
  }
  return out;
}

std::vector<Requirement> load_requirements(const Glossary& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open requirements " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_requirements(g, buf.str());
}

const Requirement& find_requirement(const std::vector<Requirement>& reqs, std::string_view id) {
  for (const auto& r : reqs) {
    if (r.id == id) return r;
  }
  throw Error(ErrorCode::kUnknownRequirement, "no requirement with id '" + std::string(id) + "'");
}

}  // namespace rbt::snl

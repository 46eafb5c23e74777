#include "rbt/filterset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rbt/error.hpp"
#include "rbt/parallel.hpp"

namespace rbt {

bool eval_clause(const snl::Clause& clause, const LabeledInput& li) {
  bool found = false;
  for (const auto& e : li.entities) {
    if (e.entity_class != clause.subject.entity_class) continue;
    if (clause.body.evaluate([&](const std::string& id) { return e.terms.contains(id); })) {
      found = true;
      break;
    }
  }
  return clause.polarity == snl::Polarity::kExists ? found : !found;
}

bool eval_precondition(const snl::Precondition& pre, const LabeledInput& li) {
  if (pre.connective == snl::Connective::kAnd) {
    return std::all_of(pre.clauses.begin(), pre.clauses.end(), [&](const auto& c) { return eval_clause(c, li); });
  }
  return std::any_of(pre.clauses.begin(), pre.clauses.end(), [&](const auto& c) { return eval_clause(c, li); });
}

FineTuneManifest filter_dataset(const snl::Precondition& pre, const std::vector<LabeledInput>& labels,
                                const std::string& caption, std::size_t workers) {
  std::vector<char> keep(labels.size(), 0);
  parallel_for(labels.size(), workers, [&](std::size_t i) { keep[i] = eval_precondition(pre, labels[i]) ? 1 : 0; });

  FineTuneManifest m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (keep[i]) m.rows.push_back({labels[i].input, caption});
  }
  if (m.rows.empty()) {
    m.warning = "no input satisfies the precondition (" + caption + ")";
    spdlog::warn("{}", *m.warning);
  }
  return m;
}

FineTuneManifest filter_dataset(const Glossary& g, const snl::Precondition& pre, const std::vector<LabeledInput>& labels,
                                const std::string& trigger, std::size_t workers) {
  if (trigger.empty()) throw Error(ErrorCode::kInvalidArgument, "trigger phrase must be non-empty");
  return filter_dataset(pre, labels, trigger + " " + snl::render_precondition(g, pre), workers);
}

std::string write_finetune_jsonl(const FineTuneManifest& m) {
  std::string out;
  for (const auto& r : m.rows) out += nlohmann::json{{"image", r.image}, {"caption", r.caption}}.dump() + "\n";
  return out;
}

std::vector<FineTuneRow> read_finetune_jsonl(std::string_view text) {
  std::vector<FineTuneRow> rows;
  for (const auto& row : parse_jsonl(text, "fine-tune manifest")) {
    try {
      rows.push_back({row.at("image").get<std::string>(), row.at("caption").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedFile, std::string("fine-tune manifest row: ") + e.what());
    }
  }
  return rows;
}

namespace {

struct SetState {
  SplitSetStats stats;
  std::vector<char> member;  // per input
};

// Moves members of each set (in the given order) into the test set under the
// visiting discipline; `eligible` filters candidates further.
void fill(std::vector<SetState*>& order, std::vector<SetState>& all_sets, std::vector<char>& in_test,
          const std::vector<char>& eligible) {
  const std::size_t n = in_test.size();
  std::vector<char> considered(n, 0);
  for (SetState* s : order) {
    for (std::size_t i = 0; i < n && s->stats.in_test < s->stats.cap; ++i) {
      if (!s->member[i] || in_test[i] || considered[i] || !eligible[i]) continue;
      const bool fits = std::all_of(all_sets.begin(), all_sets.end(), [&](const SetState& t) {
        return !t.member[i] || t.stats.in_test < t.stats.cap;
      });
      if (!fits) continue;
      in_test[i] = 1;
      for (auto& t : all_sets) {
        if (t.member[i]) ++t.stats.in_test;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (s->member[i]) considered[i] = 1;
    }
  }
}

}  // namespace

HeldoutSplit build_heldout_split(const std::vector<LabeledInput>& labels,
                                 const std::vector<snl::Requirement>& requirements, double r_percent) {
  if (!(r_percent > 0.0 && r_percent < 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split percentage must lie strictly between 0 and 100");
  }
  const std::size_t n = labels.size();
  // Positive sets first, complements after; caps are tracked for all.
  std::vector<SetState> sets;
  sets.reserve(2 * requirements.size());
  for (bool complement : {false, true}) {
    for (const auto& req : requirements) {
      SetState s;
      s.stats.requirement_id = req.id;
      s.stats.complement = complement;
      s.member.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const bool sat = eval_precondition(req.precondition, labels[i]);
        s.member[i] = (sat != complement) ? 1 : 0;
      }
      s.stats.size = static_cast<std::size_t>(std::count(s.member.begin(), s.member.end(), 1));
      // The epsilon keeps exact products such as 10% of 100 from landing at 9.
      s.stats.cap = static_cast<std::size_t>(std::floor(r_percent * static_cast<double>(s.stats.size) / 100.0 + 1e-9));
      sets.push_back(std::move(s));
    }
  }

  auto ascending = [](SetState* a, SetState* b) {
    if (a->stats.size != b->stats.size) return a->stats.size < b->stats.size;
    return a->stats.requirement_id < b->stats.requirement_id;
  };
  std::vector<SetState*> positives, negatives;
  for (auto& s : sets) (s.stats.complement ? negatives : positives).push_back(&s);
  std::stable_sort(positives.begin(), positives.end(), ascending);
  std::stable_sort(negatives.begin(), negatives.end(), ascending);

  std::vector<char> in_test(n, 0);
  fill(positives, sets, in_test, std::vector<char>(n, 1));

  std::vector<char> in_no_positive(n, 1);
  for (const auto* s : positives) {
    for (std::size_t i = 0; i < n; ++i) {
      if (s->member[i]) in_no_positive[i] = 0;
    }
  }
  fill(negatives, sets, in_test, in_no_positive);

  HeldoutSplit split;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? split.test : split.train).push_back(labels[i]);
  for (auto& s : sets) split.sets.push_back(s.stats);
  return split;
}

}  // namespace rbt

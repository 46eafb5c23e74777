#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbt/glossary.hpp"
#include "rbt/labeled_input.hpp"
#include "rbt/snl.hpp"

namespace rbt {

// Exists-clauses hold when some entity of the clause's class satisfies the
// body; none-clauses are their negation.
bool eval_clause(const snl::Clause& clause, const LabeledInput& li);
bool eval_precondition(const snl::Precondition& pre, const LabeledInput& li);

struct FineTuneRow {
  std::string image;
  std::string caption;

  friend bool operator==(const FineTuneRow&, const FineTuneRow&) = default;
};

struct FineTuneManifest {
  std::vector<FineTuneRow> rows;
  std::optional<std::string> warning;  // set when nothing matched
};

// Caption is trigger + " " + the rendered precondition.
FineTuneManifest filter_dataset(const Glossary& g, const snl::Precondition& pre, const std::vector<LabeledInput>& labels,
                                const std::string& trigger, std::size_t workers = 1);
// Same filter with a caption given verbatim.
FineTuneManifest filter_dataset(const snl::Precondition& pre, const std::vector<LabeledInput>& labels,
                                const std::string& caption, std::size_t workers = 1);

std::string write_finetune_jsonl(const FineTuneManifest& m);
std::vector<FineTuneRow> read_finetune_jsonl(std::string_view text);

struct SplitSetStats {
  std::string requirement_id;
  bool complement = false;
  std::size_t size = 0;     // |D_i| or |complement of D_i|
  std::size_t cap = 0;      // floor(r% * size)
  std::size_t in_test = 0;  // test items in this set after the split
};

struct HeldoutSplit {
  std::vector<LabeledInput> train;
  std::vector<LabeledInput> test;
  std::vector<SplitSetStats> sets;
};

// Satisfying sets are visited smallest first (ties by requirement id), each
// contributing items not yet in the test set nor in an earlier visited set,
// while every set's test count stays within its cap. The complements follow
// with the same discipline, restricted to items satisfying no requirement.
// Items keep their input order in both outputs.
HeldoutSplit build_heldout_split(const std::vector<LabeledInput>& labels,
                                 const std::vector<snl::Requirement>& requirements, double r_percent);

}  // namespace rbt

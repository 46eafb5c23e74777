#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rbt/error.hpp"
#include "rbt/glossary.hpp"
#include "rbt/labeled_input.hpp"
#include "rbt/scenegraph.hpp"

namespace rbt::labeling {

// Per-term yes/no verdicts for an input, the abstraction behind ground-truth
// labels and external classifiers.
class TermVerdictProvider {
 public:
  virtual ~TermVerdictProvider() = default;
  virtual bool verdict(const std::string& input, const std::string& term_id) const = 0;
  // False when the provider must not be queried from several threads at once.
  virtual bool concurrent() const { return true; }
  // Full entity labels when the provider has them; precondition evaluation then
  // binds clauses to entities instead of reading per-term verdicts.
  virtual const LabeledInput* labels_for(const std::string& /*input*/) const { return nullptr; }
};

// Yes iff the term is present on some entity of the term's entity class (any
// entity when the term declares no class).
class GroundTruthProvider : public TermVerdictProvider {
 public:
  GroundTruthProvider(const Glossary& g, const std::vector<LabeledInput>& labels);
  bool verdict(const std::string& input, const std::string& term_id) const override;
  const LabeledInput* labels_for(const std::string& input) const override;

 private:
  const Glossary& g_;
  std::map<std::string, const LabeledInput*, std::less<>> by_input_;
};

// Verdicts read from an answer manifest; a missing (input, term) pair is a
// ProviderFailure.
class AnswerManifestProvider : public TermVerdictProvider {
 public:
  explicit AnswerManifestProvider(std::map<std::pair<std::string, std::string>, bool> answers);
  static AnswerManifestProvider parse(std::string_view jsonl);
  static AnswerManifestProvider load(const std::filesystem::path& path);
  bool verdict(const std::string& input, const std::string& term_id) const override;

 private:
  std::map<std::pair<std::string, std::string>, bool> answers_;
};

struct ItemFailure {
  std::string input;
  ErrorCode code;
  std::string message;
};

struct LabelingReport {
  std::vector<LabeledInput> labels;  // successful items, input order
  std::vector<ItemFailure> failures;
  std::size_t attempted = 0;
};

using Labeler = std::function<LabeledInput(const std::string& input)>;

inline constexpr double kDefaultFailureTolerance = 0.01;

// Labels every input, recording per-item errors. Throws LabelingFailed when the
// failed fraction exceeds `failure_tolerance`.
LabelingReport label_dataset(const std::vector<std::string>& inputs, const Labeler& labeler,
                             double failure_tolerance = kDefaultFailureTolerance, std::size_t workers = 1);

// Morphometric labeler; `class_of` maps an input reference to its class term id.
Labeler morpho_labeler(const Glossary& g, std::function<std::string(const std::string&)> class_of,
                       double threshold = 0.5);
// Scene-graph labeler; inputs are scene-graph JSON paths.
Labeler scene_labeler(const Glossary& g, const scene::RuleSet& rules, std::size_t max_len = 0);

// Answer-manifest rows {"input","term","answer"} grouped per input (first-
// appearance order) into sole-entity labels: yes answers become terms.
std::vector<LabeledInput> ingest_vqa_verdicts(std::string_view jsonl, const Glossary& g);
std::vector<LabeledInput> load_vqa_verdicts(const std::filesystem::path& path, const Glossary& g);

inline constexpr std::string_view kDefaultPromptTemplate = "Does the object have {term}? Answer only yes or no.";

std::string make_prompt(const GlossaryTerm& term);

// One {"input","term","prompt"} row per input and term. An empty term list
// means every glossary term.
std::string prompt_manifest(const std::vector<std::string>& inputs, const Glossary& g,
                            const std::vector<std::string>& term_ids = {});

}  // namespace rbt::labeling

#include "rbt/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rbt/image_io.hpp"
#include "rbt/morpho.hpp"
#include "rbt/parallel.hpp"

namespace rbt::labeling {

using nlohmann::json;

GroundTruthProvider::GroundTruthProvider(const Glossary& g, const std::vector<LabeledInput>& labels) : g_(g) {
  for (const auto& li : labels) by_input_.emplace(li.input, &li);
}

bool GroundTruthProvider::verdict(const std::string& input, const std::string& term_id) const {
  auto it = by_input_.find(input);
  if (it == by_input_.end()) {
    throw Error(ErrorCode::kProviderFailure, "no labels for input '" + input + "'");
  }
  const auto& term = g_.term(term_id);
  for (const auto& e : it->second->entities) {
    if (term.entity_class && *term.entity_class != e.entity_class) continue;
    if (e.terms.contains(term_id)) return true;
  }
  return false;
}

const LabeledInput* GroundTruthProvider::labels_for(const std::string& input) const {
  auto it = by_input_.find(input);
  return it == by_input_.end() ? nullptr : it->second;
}

AnswerManifestProvider::AnswerManifestProvider(std::map<std::pair<std::string, std::string>, bool> answers)
    : answers_(std::move(answers)) {}

namespace {

bool parse_answer(const json& row) {
  std::string a = row.at("answer").get<std::string>();
  std::transform(a.begin(), a.end(), a.begin(), [](unsigned char c) { return std::tolower(c); });
  while (!a.empty() && (a.back() == '.' || std::isspace(static_cast<unsigned char>(a.back())))) a.pop_back();
  if (a == "yes") return true;
  if (a == "no") return false;
  throw Error(ErrorCode::kMalformedFile, "answer must be yes or no, got '" + a + "'");
}

}  // namespace

AnswerManifestProvider AnswerManifestProvider::parse(std::string_view jsonl) {
  std::map<std::pair<std::string, std::string>, bool> answers;
  for (const auto& row : parse_jsonl(jsonl, "answer manifest")) {
    try {
      answers[{row.at("input").get<std::string>(), row.at("term").get<std::string>()}] = parse_answer(row);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedFile, std::string("answer manifest row: ") + e.what());
    }
  }
  return AnswerManifestProvider(std::move(answers));
}

AnswerManifestProvider AnswerManifestProvider::load(const std::filesystem::path& path) {
  return parse(read_text_file(path, "answer manifest"));
}

bool AnswerManifestProvider::verdict(const std::string& input, const std::string& term_id) const {
  auto it = answers_.find({input, term_id});
  if (it == answers_.end()) {
    throw Error(ErrorCode::kProviderFailure, "no verdict for term '" + term_id + "' on input '" + input + "'");
  }
  return it->second;
}

LabelingReport label_dataset(const std::vector<std::string>& inputs, const Labeler& labeler, double failure_tolerance,
                             std::size_t workers) {
  if (!(failure_tolerance >= 0.0 && failure_tolerance <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "failure tolerance must lie in [0,1]");
  }
  std::vector<std::optional<LabeledInput>> results(inputs.size());
  std::vector<std::optional<ItemFailure>> errors(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    try {
      results[i] = labeler(inputs[i]);
    } catch (const Error& e) {
      errors[i] = ItemFailure{inputs[i], e.code(), e.what()};
    } catch (const std::exception& e) {
      errors[i] = ItemFailure{inputs[i], ErrorCode::kIo, e.what()};
    }
  });

  LabelingReport report;
  report.attempted = inputs.size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (results[i]) report.labels.push_back(std::move(*results[i]));
    if (errors[i]) {
      spdlog::warn("labeling skipped {}: {}", errors[i]->input, errors[i]->message);
      report.failures.push_back(std::move(*errors[i]));
    }
  }
  if (!inputs.empty()) {
    const double rate = static_cast<double>(report.failures.size()) / static_cast<double>(inputs.size());
    if (rate > failure_tolerance) {
      throw Error(ErrorCode::kLabelingFailed, std::to_string(report.failures.size()) + " of " +
                                                  std::to_string(inputs.size()) + " inputs failed to label; first: " +
                                                  report.failures.front().message);
    }
  }
  return report;
}

Labeler morpho_labeler(const Glossary& g, std::function<std::string(const std::string&)> class_of, double threshold) {
  return [&g, class_of = std::move(class_of), threshold](const std::string& input) {
    const auto& class_term = g.term(class_of(input));
    auto terms = morpho::label(load_image(input), g, class_term, threshold);
    auto li = LabeledInput::sole(input, {terms.begin(), terms.end()});
    validate(li, g);
    return li;
  };
}

Labeler scene_labeler(const Glossary& g, const scene::RuleSet& rules, std::size_t max_len) {
  return [&g, &rules, max_len](const std::string& input) {
    return scene::label_scene(scene::SceneGraph::load(input), rules, g, input, max_len);
  };
}

std::vector<LabeledInput> ingest_vqa_verdicts(std::string_view jsonl, const Glossary& g) {
  std::vector<LabeledInput> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : parse_jsonl(jsonl, "answer manifest")) {
    std::string input;
    std::string term;
    bool yes = false;
    try {
      input = row.at("input").get<std::string>();
      term = row.at("term").get<std::string>();
      yes = parse_answer(row);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedFile, std::string("answer manifest row: ") + e.what());
    }
    if (!g.find_term(term)) throw Error(ErrorCode::kUnknownTermId, "answer manifest term '" + term + "'");
    auto [it, fresh] = index.emplace(input, out.size());
    if (fresh) out.push_back(LabeledInput::sole(input, {}));
    if (yes) out[it->second].entities.front().terms.insert(term);
  }
  for (const auto& li : out) validate(li, g);
  return out;
}

std::vector<LabeledInput> load_vqa_verdicts(const std::filesystem::path& path, const Glossary& g) {
  return ingest_vqa_verdicts(read_text_file(path, "answer manifest"), g);
}

namespace {

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

}  // namespace

std::string make_prompt(const GlossaryTerm& term) {
  const std::string phrase = collapse_spaces(term.prompt_phrase ? *term.prompt_phrase : term.phrase);
  std::string prompt(term.prompt_template ? *term.prompt_template : std::string(kDefaultPromptTemplate));
  constexpr std::string_view kSlot = "{term}";
  for (auto pos = prompt.find(kSlot); pos != std::string::npos; pos = prompt.find(kSlot, pos + phrase.size())) {
    prompt.replace(pos, kSlot.size(), phrase);
  }
  return collapse_spaces(prompt);
}

std::string prompt_manifest(const std::vector<std::string>& inputs, const Glossary& g,
                            const std::vector<std::string>& term_ids) {
  std::vector<const GlossaryTerm*> terms;
  if (term_ids.empty()) {
    for (const auto& t : g.terms()) terms.push_back(&t);
  } else {
    for (const auto& id : term_ids) terms.push_back(&g.term(id));
  }
  std::string out;
  for (const auto& input : inputs) {
    for (const auto* t : terms) {
      out += json{{"input", input}, {"term", t->id}, {"prompt", make_prompt(*t)}}.dump() + "\n";
    }
  }
  return out;
}

}  // namespace rbt::labeling

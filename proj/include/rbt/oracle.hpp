#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/formula.hpp"
#include "rbt/glossary.hpp"
#include "rbt/taxonomy.hpp"

namespace rbt {

enum class OutputKind { kClass, kRegression };

struct OutputField {
  std::string name;
  std::optional<bool> right_positive;
};

struct OutputSchema {
  OutputKind kind = OutputKind::kClass;
  std::optional<std::vector<std::string>> labels;  // class outputs; nullopt accepts any label
  std::vector<OutputField> fields;                 // regression outputs

  const OutputField* field(std::string_view name) const;

  static OutputSchema from_json(const nlohmann::json& doc);
  static OutputSchema parse(std::string_view json_text);
  static OutputSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct ModelOutput {
  OutputKind kind = OutputKind::kClass;
  std::string label;
  std::map<std::string, double> outputs;

  static ModelOutput of_class(std::string label);
  static ModelOutput of_regression(std::map<std::string, double> outputs);

  // MUT protocol response object.
  static ModelOutput from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  friend bool operator==(const ModelOutput&, const ModelOutput&) = default;
};

// SchemaMismatch when the kind differs, a declared field is absent or non-
// finite, or a class label lies outside the declared label set.
void validate_output(const OutputSchema& schema, const ModelOutput& out);

// Value of a regression predicate's field expressed in the predicate's own
// sign convention.
double predicate_value(const OutputPredicate& p, const OutputSchema& schema, const ModelOutput& out);

bool check_predicate(const OutputPredicate& p, const ModelOutput& out, const OutputSchema& schema,
                     const Taxonomy* taxonomy);

// Evaluates a postcondition whose atoms are output-predicate phrases.
bool check_postcondition(const Glossary& g, const TermFormula& post, const ModelOutput& out,
                         const OutputSchema& schema, const Taxonomy* taxonomy = nullptr);

}  // namespace rbt

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/glossary.hpp"

namespace rbt {

struct Entity {
  std::string id;
  std::string entity_class;
  std::set<std::string> terms;

  friend bool operator==(const Entity&, const Entity&) = default;
};

// One input and the glossary terms attached to each of its entities. Sole-
// entity datasets carry a single entity whose id and class are "subject".
struct LabeledInput {
  std::string input;
  std::vector<Entity> entities;

  const Entity* find(std::string_view id) const;
  // Returns the entity with this id, appending it when absent.
  Entity& entity(const std::string& id, const std::string& entity_class);

  static LabeledInput sole(std::string input, std::set<std::string> terms);

  friend bool operator==(const LabeledInput&, const LabeledInput&) = default;
};

// Entity ids unique (MalformedFile), terms registered (UnknownTermId), at most
// one member of any term group per entity (ConflictingBandTerms).
void validate(const LabeledInput& li, const Glossary& g);

nlohmann::json to_json(const LabeledInput& li);
LabeledInput labeled_input_from_json(const nlohmann::json& row);

std::string write_labels_jsonl(const std::vector<LabeledInput>& labels);
std::vector<LabeledInput> read_labels_jsonl(std::string_view text);
void save_labels(const std::filesystem::path& path, const std::vector<LabeledInput>& labels);
std::vector<LabeledInput> load_labels(const std::filesystem::path& path);

// JSONL helpers shared by every manifest reader.
std::vector<nlohmann::json> parse_jsonl(std::string_view text, std::string_view what);
std::string read_text_file(const std::filesystem::path& path, std::string_view what);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace rbt

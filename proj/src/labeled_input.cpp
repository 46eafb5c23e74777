#include "rbt/labeled_input.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "rbt/error.hpp"

namespace rbt {

using nlohmann::json;

const Entity* LabeledInput::find(std::string_view id) const {
  for (const auto& e : entities) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

Entity& LabeledInput::entity(const std::string& id, const std::string& entity_class) {
  for (auto& e : entities) {
    if (e.id == id) return e;
  }
  entities.push_back({id, entity_class, {}});
  return entities.back();
}

LabeledInput LabeledInput::sole(std::string input, std::set<std::string> terms) {
  LabeledInput li;
  li.input = std::move(input);
  li.entities.push_back({std::string(kSoleClass), std::string(kSoleClass), std::move(terms)});
  return li;
}

void validate(const LabeledInput& li, const Glossary& g) {
  std::set<std::string> ids;
  for (const auto& e : li.entities) {
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::kMalformedFile, li.input + ": entity id '" + e.id + "' repeated");
    }
    std::map<const TermGroup*, std::string> used;
    for (const auto& t : e.terms) {
      if (!g.find_term(t)) throw Error(ErrorCode::kUnknownTermId, li.input + ": term '" + t + "'");
      const auto* group = g.group_of(t);
      if (!group) continue;
      auto [it, fresh] = used.emplace(group, t);
      if (!fresh) {
        throw Error(ErrorCode::kConflictingBandTerms, li.input + ": entity '" + e.id + "' has both '" + it->second +
                                                          "' and '" + t + "' from group '" + group->id + "'");
      }
    }
  }
}

json to_json(const LabeledInput& li) {
  json entities = json::array();
  for (const auto& e : li.entities) {
    entities.push_back({{"id", e.id}, {"class", e.entity_class}, {"terms", e.terms}});
  }
  return {{"input", li.input}, {"entities", std::move(entities)}};
}

LabeledInput labeled_input_from_json(const json& row) {
  try {
    LabeledInput li;
    li.input = row.at("input").get<std::string>();
    for (const auto& e : row.at("entities")) {
      Entity ent;
      ent.id = e.at("id").get<std::string>();
      ent.entity_class = e.value("class", ent.id);
      for (const auto& t : e.value("terms", json::array())) ent.terms.insert(t.get<std::string>());
      li.entities.push_back(std::move(ent));
    }
    return li;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("labels row: ") + e.what());
  }
}

std::vector<json> parse_jsonl(std::string_view text, std::string_view what) {
  std::vector<json> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedFile,
                  std::string(what) + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::string read_text_file(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open " + std::string(what) + " " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

std::string write_labels_jsonl(const std::vector<LabeledInput>& labels) {
  std::string out;
  for (const auto& li : labels) out += to_json(li).dump() + "\n";
  return out;
}

std::vector<LabeledInput> read_labels_jsonl(std::string_view text) {
  std::vector<LabeledInput> out;
  for (const auto& row : parse_jsonl(text, "labels manifest")) out.push_back(labeled_input_from_json(row));
  return out;
}

void save_labels(const std::filesystem::path& path, const std::vector<LabeledInput>& labels) {
  write_text_file(path, write_labels_jsonl(labels));
}

std::vector<LabeledInput> load_labels(const std::filesystem::path& path) {
  return read_labels_jsonl(read_text_file(path, "labels manifest"));
}

}  // namespace rbt

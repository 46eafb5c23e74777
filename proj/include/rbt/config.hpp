#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace rbt {

enum class LabelerKind { kNone, kMorpho, kSceneGraph, kVqa };

struct LabelerConfig {
  LabelerKind kind = LabelerKind::kNone;
  std::filesystem::path images;   // morpho: PNG directory or IDX image file
  std::filesystem::path classes;  // morpho: {"input","class"} JSONL or IDX label file
  std::string class_prefix = "mnist.digit.";  // IDX labels become prefix + digit
  std::filesystem::path scenes;   // scene graph: directory of scene JSON files
  std::filesystem::path answers;  // vqa: answer manifest
  double threshold = 0.5;
  double failure_tolerance = 0.01;
};

struct CampaignDefaults {
  std::size_t n = 1000;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double timeout_secs = 60.0;
};

// Project file; relative paths resolve against the file's directory.
struct ProjectConfig {
  std::filesystem::path base_dir;
  std::filesystem::path glossary;
  std::filesystem::path requirements;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> taxonomy;
  std::optional<std::filesystem::path> output_schema;
  std::optional<std::filesystem::path> rules;
  std::filesystem::path out_dir;
  std::string trigger = "TRGR";
  LabelerConfig labeler;
  CampaignDefaults campaign;

  static ProjectConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  // Config errors when the file is missing, malformed, or names missing files.
  static ProjectConfig load(const std::filesystem::path& path);

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const std::filesystem::path& labels_path() const;  // throws Config when unset
};

}  // namespace rbt

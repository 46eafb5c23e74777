#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rbt/glossary.hpp"

namespace rbt::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(RBT_FIXTURE_DIR) / rel; }

inline const Glossary& glossary(const std::string& dataset) {
  static std::map<std::string, Glossary> cache;
  auto it = cache.find(dataset);
  if (it == cache.end()) it = cache.emplace(dataset, Glossary::load(fixture(dataset + "/glossary.json"))).first;
  return it->second;
}

}  // namespace rbt::testing

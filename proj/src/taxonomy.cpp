#include "rbt/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rbt/error.hpp"

namespace rbt {

Taxonomy::Taxonomy() : cache_(std::make_unique<Cache>()) {}
Taxonomy::Taxonomy(Taxonomy&&) noexcept = default;
Taxonomy& Taxonomy::operator=(Taxonomy&&) noexcept = default;
Taxonomy::~Taxonomy() = default;

Taxonomy::Taxonomy(const std::vector<std::pair<std::string, std::string>>& edges) : Taxonomy() {
  std::set<std::pair<std::string, std::string>> unique;
  for (const auto& [child, parent] : edges) {
    if (child.empty() || parent.empty()) throw Error(ErrorCode::kMalformedFile, "taxonomy edge with empty label");
    nodes_.insert(child);
    nodes_.insert(parent);
    if (unique.emplace(child, parent).second) children_[parent].push_back(child);
  }

  // Kahn's algorithm: any node left with unresolved in-degree lies on a cycle.
  std::unordered_map<std::string, std::size_t> indegree;
  for (const auto& n : nodes_) indegree[n] = 0;
  for (const auto& [parent, kids] : children_) {
    for (const auto& k : kids) ++indegree[k];
  }
  std::vector<std::string> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push_back(n);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto n = std::move(ready.back());
    ready.pop_back();
    ++visited;
    if (auto it = children_.find(n); it != children_.end()) {
      for (const auto& k : it->second) {
        if (--indegree[k] == 0) ready.push_back(k);
      }
    }
  }
  if (visited != nodes_.size()) {
    std::string example;
    for (const auto& [n, d] : indegree) {
      if (d > 0 && (example.empty() || n < example)) example = n;
    }
    throw Error(ErrorCode::kCycleDetected, "taxonomy has a cycle through '" + example + "'");
  }
}

Taxonomy Taxonomy::parse_jsonl(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto row = nlohmann::json::parse(line);
      edges.emplace_back(row.at("child").get<std::string>(), row.at("parent").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedFile, "taxonomy line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Taxonomy(edges);
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open taxonomy " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

bool Taxonomy::contains(std::string_view label) const { return nodes_.contains(std::string(label)); }

const std::vector<std::string>& Taxonomy::children(std::string_view label) const {
  static const std::vector<std::string> kNone;
  auto it = children_.find(std::string(label));
  return it == children_.end() ? kNone : it->second;
}

const std::set<std::string>& Taxonomy::leaves_under(std::string_view root) const {
  const std::string key(root);
  if (!nodes_.contains(key)) throw Error(ErrorCode::kUnknownLabel, "taxonomy has no label '" + key + "'");
  std::lock_guard lock(cache_->mu);
  if (auto it = cache_->leaves.find(key); it != cache_->leaves.end()) return *it->second;

  auto out = std::make_unique<std::set<std::string>>();
  std::set<std::string> seen{key};
  std::vector<std::string> stack{key};
  while (!stack.empty()) {
    auto n = std::move(stack.back());
    stack.pop_back();
    const auto& kids = children(n);
    if (kids.empty()) out->insert(n);
    for (const auto& k : kids) {
      if (seen.insert(k).second) stack.push_back(k);
    }
  }
  return *cache_->leaves.emplace(key, std::move(out)).first->second;
}

bool Taxonomy::is_hyponym(std::string_view label, std::string_view root) const {
  return leaves_under(root).contains(std::string(label));
}

}  // namespace rbt

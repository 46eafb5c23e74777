#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rbt {

// Label hierarchy given as (child, parent) edges. Multiple parents are allowed;
// cycles are rejected at construction.
class Taxonomy {
 public:
  Taxonomy();
  explicit Taxonomy(const std::vector<std::pair<std::string, std::string>>& edges);
  Taxonomy(Taxonomy&&) noexcept;
  Taxonomy& operator=(Taxonomy&&) noexcept;
  ~Taxonomy();

  // JSONL, one {"child","parent"} object per line; blank lines are skipped.
  static Taxonomy parse_jsonl(std::string_view text);
  static Taxonomy load(const std::filesystem::path& path);

  const std::set<std::string>& nodes() const noexcept { return nodes_; }
  bool contains(std::string_view label) const;
  const std::vector<std::string>& children(std::string_view label) const;

  // Leaf descendants of root, or {root} when root is a leaf. Throws UnknownLabel.
  const std::set<std::string>& leaves_under(std::string_view root) const;
  bool is_hyponym(std::string_view label, std::string_view root) const;

 private:
  std::set<std::string> nodes_;
  std::unordered_map<std::string, std::vector<std::string>> children_;

  struct Cache {
    std::mutex mu;
    std::unordered_map<std::string, std::unique_ptr<const std::set<std::string>>> leaves;
  };
  std::unique_ptr<Cache> cache_;
};

}  // namespace rbt

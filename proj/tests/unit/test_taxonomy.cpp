#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "../support/fixtures.hpp"
#include "../support/taxonomy_oracle.hpp"
#include "rbt/error.hpp"
#include "rbt/taxonomy.hpp"

namespace rbt {
namespace {

using testing::Edges;
using testing::closure_leaves;
using testing::random_dag;

TEST(Taxonomy, ChainHasSingleLeaf) {
  Taxonomy t(Edges{{"b", "a"}, {"c", "b"}});
  EXPECT_EQ(t.leaves_under("a"), (std::set<std::string>{"c"}));
  EXPECT_EQ(t.leaves_under("c"), (std::set<std::string>{"c"}));
}

TEST(Taxonomy, BirdFixtureHas59Leaves) {
  auto t = Taxonomy::load(testing::fixture("imagenet/taxonomy.jsonl"));
  EXPECT_EQ(t.leaves_under("bird").size(), 59u);
  EXPECT_TRUE(t.is_hyponym("robin", "bird"));
  EXPECT_FALSE(t.is_hyponym("worm fence", "bird"));
  EXPECT_FALSE(t.is_hyponym("robin", "insect"));
  EXPECT_FALSE(t.is_hyponym("zork", "bird"));
}

TEST(Taxonomy, UnknownRootThrows) {
  Taxonomy t(Edges{{"b", "a"}});
  try {
    t.leaves_under("zork");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownLabel);
  }
  EXPECT_THROW(t.is_hyponym("b", "zork"), Error);
}

TEST(Taxonomy, CyclesRejectedAtLoad) {
  for (const Edges& e : {Edges{{"a", "a"}}, Edges{{"b", "a"}, {"c", "b"}, {"a", "c"}}}) {
    try {
      Taxonomy t(e);
      FAIL();
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kCycleDetected);
    }
  }
}

TEST(Taxonomy, MalformedJsonl) {
  EXPECT_THROW(Taxonomy::parse_jsonl("{\"child\":\"a\"}\n"), Error);
  EXPECT_EQ(Taxonomy::parse_jsonl("\n{\"child\":\"a\",\"parent\":\"b\"}\n\n").nodes().size(), 2u);
}

TEST(Taxonomy, DiamondDeduplicates) {
  Taxonomy t(Edges{{"b", "a"}, {"c", "a"}, {"d", "b"}, {"d", "c"}, {"d", "c"}});
  EXPECT_EQ(t.leaves_under("a"), (std::set<std::string>{"d"}));
}

TEST(Taxonomy, MatchesClosureOracleOnRandomDags) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    auto edges = random_dag(rng, n);
    Taxonomy t(edges);
    for (const auto& node : t.nodes()) {
      ASSERT_EQ(t.leaves_under(node), closure_leaves(edges, node)) << "trial " << trial << " node " << node;
    }
  }
}

TEST(Taxonomy, SiblingRootsDisjointInTrees) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Edges edges;
    const int n = 3 + static_cast<int>(rng() % 30);
    for (int c = 1; c < n; ++c) edges.emplace_back("n" + std::to_string(c), "n" + std::to_string(rng() % c));
    Taxonomy t(edges);
    for (const auto& node : t.nodes()) {
      const auto& kids = t.children(node);
      for (std::size_t i = 0; i < kids.size(); ++i)
        for (std::size_t j = i + 1; j < kids.size(); ++j)
          for (const auto& leaf : t.leaves_under(kids[i])) EXPECT_FALSE(t.leaves_under(kids[j]).contains(leaf));
    }
  }
}

TEST(Taxonomy, ConcurrentReadsAgree) {
  auto t = Taxonomy::load(testing::fixture("imagenet/taxonomy.jsonl"));
  std::vector<std::thread> pool;
  std::vector<std::size_t> sizes(8);
  for (int i = 0; i < 8; ++i) {
    pool.emplace_back([&, i] { sizes[i] = t.leaves_under(i % 2 ? "bird" : "animal").size(); });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < 8; ++i) EXPECT_EQ(sizes[i], t.leaves_under(i % 2 ? "bird" : "animal").size());
}

}  // namespace
}  // namespace rbt

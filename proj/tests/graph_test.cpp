#include "cfgevade/graph.hpp"

#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "cfgevade/corpus.hpp"
#include "cfgevade/rng.hpp"

namespace cfgevade {
namespace {

ControlFlowGraph MakeGraph(std::vector<std::string> names, std::vector<CfgEdge> edges) {
  ControlFlowGraph g;
  g.name = "g";
  for (std::size_t i = 0; i < names.size(); ++i) g.nodes.push_back({i, names[i]});
  g.edges = std::move(edges);
  return g;
}

TEST(ParseCfgJson, MinimalGraph) {
  const auto g = parse_cfg_json(R"({"name":"t","entry":0,"nodes":[{"id":0,"name":"entry0"}],"edges":[]})");
  EXPECT_EQ(g.name, "t");
  EXPECT_FALSE(g.label.has_value());
  ASSERT_EQ(g.nodes.size(), 1u);
  EXPECT_EQ(g.nodes[0].name, "entry0");
  EXPECT_TRUE(g.edges.empty());
}

TEST(ParseCfgJson, DanglingEdgeIsSchemaViolation) {
  EXPECT_THROW(
      parse_cfg_json(R"({"name":"t","entry":0,"nodes":[{"id":0,"name":"entry0"}],"edges":[[0,9]]})"),
      SchemaViolation);
}

TEST(ParseCfgJson, Errors) {
  EXPECT_THROW(parse_cfg_json("{\"name\":"), MalformedJson);
  EXPECT_THROW(parse_cfg_json("[]"), SchemaViolation);
  // missing key
  EXPECT_THROW(parse_cfg_json(R"({"name":"t","nodes":[{"id":0,"name":"a"}],"edges":[]})"),
               SchemaViolation);
  // duplicate id
  EXPECT_THROW(parse_cfg_json(
                   R"({"name":"t","entry":0,"nodes":[{"id":0,"name":"a"},{"id":0,"name":"b"}],"edges":[]})"),
               SchemaViolation);
  // dangling entry
  EXPECT_THROW(parse_cfg_json(R"({"name":"t","entry":3,"nodes":[{"id":0,"name":"a"}],"edges":[]})"),
               SchemaViolation);
  // whitespace in a name
  EXPECT_THROW(parse_cfg_json(R"({"name":"t","entry":0,"nodes":[{"id":0,"name":"a b"}],"edges":[]})"),
               SchemaViolation);
  EXPECT_THROW(parse_cfg_json(R"({"name":"t","entry":0,"nodes":[{"id":0,"name":""}],"edges":[]})"),
               SchemaViolation);
  // negative id
  EXPECT_THROW(parse_cfg_json(R"({"name":"t","entry":0,"nodes":[{"id":-1,"name":"a"}],"edges":[]})"),
               SchemaViolation);
  EXPECT_THROW(
      parse_cfg_json(R"({"name":"t","label":"evil","entry":0,"nodes":[{"id":0,"name":"a"}],"edges":[]})"),
      SchemaViolation);
}

TEST(ParseCfgJson, IgnoresUnknownKeys) {
  const auto g = parse_cfg_json(
      R"({"name":"t","arch":"x86","entry":0,"nodes":[{"id":0,"name":"entry0","addr":4096}],"edges":[]})");
  EXPECT_EQ(g.nodes.size(), 1u);
}

TEST(SerializeCfg, CanonicalRoundTrip) {
  const std::string text =
      R"({"name":"t","entry":0,"nodes":[{"id":0,"name":"entry0"}],"edges":[]})";
  EXPECT_EQ(serialize_cfg(parse_cfg_json(text)), text);
}

TEST(SerializeCfg, OrderIndependent) {
  auto a = MakeGraph({"entry0", "a", "b"}, {{0, 1}, {0, 2}, {1, 2}});
  auto b = a;
  std::swap(b.nodes[0], b.nodes[2]);
  std::swap(b.edges[0], b.edges[2]);
  EXPECT_EQ(serialize_cfg(a), serialize_cfg(b));
  EXPECT_EQ(a, b);
}

TEST(SerializeCfg, CarriesLabel) {
  auto g = MakeGraph({"entry0"}, {});
  g.label = Label::Malicious;
  EXPECT_NE(serialize_cfg(g).find(R"("label":"malicious")"), std::string::npos);
}

TEST(SerializeCfg, RoundTripOnSyntheticGraphs) {
  CorpusConfig cfg;
  cfg.n_benign = 20;
  cfg.n_malicious = 20;
  cfg.seed = 3;
  for (const auto& g : synth_corpus(cfg)) {
    const auto text = serialize_cfg(g);
    const auto back = parse_cfg_json(text);
    EXPECT_EQ(back, g);
    EXPECT_EQ(serialize_cfg(back), text);
  }
}

TEST(DfsLinearize, Chain) {
  const auto g = MakeGraph({"entry0", "a", "b"}, {{0, 1}, {1, 2}});
  EXPECT_EQ(dfs_linearize(g, 16).calls, (std::vector<std::string>{"entry0", "a", "b"}));
}

TEST(DfsLinearize, DiamondTieBreak) {
  // Node ids deliberately disagree with name order.
  const auto g = MakeGraph({"entry0", "b", "a", "c"}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  EXPECT_EQ(dfs_linearize(g, 16).calls, (std::vector<std::string>{"entry0", "a", "c", "b"}));
}

TEST(DfsLinearize, TieOnNameFallsBackToId) {
  const auto g = MakeGraph({"entry0", "x", "x", "y"}, {{0, 2}, {0, 1}, {1, 3}});
  // x(id 1) before x(id 2); y hangs off id 1.
  EXPECT_EQ(dfs_linearize(g, 16).calls, (std::vector<std::string>{"entry0", "x", "y", "x"}));
}

TEST(DfsLinearize, TruncatesLongChain) {
  std::vector<std::string> names{"entry0"};
  std::vector<CfgEdge> edges;
  for (NodeId i = 1; i < 20; ++i) {
    names.push_back("f" + std::to_string(i));
    edges.emplace_back(i - 1, i);
  }
  const auto seq = dfs_linearize(MakeGraph(names, edges), 16);
  ASSERT_EQ(seq.calls.size(), 16u);
  EXPECT_EQ(seq.calls.front(), "entry0");
  EXPECT_EQ(seq.calls.back(), "f15");
}

TEST(DfsLinearize, SkipsUnreachableAndHandlesCycles) {
  auto g = MakeGraph({"entry0", "a", "island"}, {{0, 1}, {1, 0}, {1, 1}});
  EXPECT_EQ(dfs_linearize(g, 16).calls, (std::vector<std::string>{"entry0", "a"}));
  g.entry = 2;
  EXPECT_EQ(dfs_linearize(g, 16).calls, (std::vector<std::string>{"island"}));
}

// Length = min(max_calls, reachable), no node twice, deterministic.
TEST(DfsLinearize, PropertiesOnRandomGraphs) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(1, 30));
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(rng.below(10)));
    std::vector<CfgEdge> edges;
    const auto m = rng.below(3 * n);
    for (std::size_t e = 0; e < m; ++e) edges.emplace_back(rng.below(n), rng.below(n));
    const auto g = MakeGraph(names, edges);
    const std::size_t max_calls = 1 + rng.below(20);

    // reachability by brute-force fixpoint
    std::vector<bool> reach(n, false);
    reach[0] = true;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [s, d] : edges) {
        if (reach[s] && !reach[d]) reach[d] = changed = true;
      }
    }
    const auto reachable = static_cast<std::size_t>(std::count(reach.begin(), reach.end(), true));

    const auto seq = dfs_linearize(g, max_calls);
    EXPECT_EQ(seq.calls.size(), std::min(max_calls, reachable));
    EXPECT_EQ(seq, dfs_linearize(g, max_calls));
    EXPECT_EQ(seq.calls.front(), names[0]);
    // With unique names, emitted names must be unique too.
    auto unique = g;
    for (auto& node : unique.nodes) node.name = "u" + std::to_string(node.id);
    auto calls = dfs_linearize(unique, max_calls).calls;
    std::sort(calls.begin(), calls.end());
    EXPECT_EQ(std::adjacent_find(calls.begin(), calls.end()), calls.end());
  }
}

}  // namespace
}  // namespace cfgevade

#include "oracles.hpp"

#include <corder/bayes_net.hpp>
#include <corder/bundled.hpp>
#include <corder/effect.hpp>

#include <gtest/gtest.h>

using namespace corder;

namespace {

std::vector<std::vector<NodeId>> subsets_without(std::size_t n, NodeId x, NodeId y) {
  std::vector<std::vector<NodeId>> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    if (mask >> x & 1 || mask >> y & 1) continue;
    std::vector<NodeId> z;
    for (NodeId v = 0; v < n; ++v)
      if (mask >> v & 1) z.push_back(v);
    out.push_back(z);
  }
  return out;
}

}  // namespace

TEST(DSeparation, ExhaustiveAgainstPathEnumeration) {
  Rng rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    auto g = oracle::random_dag(6, 0.45, rng);
    for (NodeId x = 0; x < 6; ++x)
      for (NodeId y = x + 1; y < 6; ++y)
        for (const auto& z : subsets_without(6, x, y))
          ASSERT_EQ(d_separated(g, x, y, z), oracle::d_separated(g, x, y, z)) << rep << ":" << x << "," << y;
  }
}

TEST(DSeparation, Classic) {
  // a -> m <- b, m -> d
  AdjacencyMatrix g(4);
  g.add_edge(0, 2);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  EXPECT_TRUE(d_separated(g, 0, 1, {}));
  EXPECT_FALSE(d_separated(g, 0, 1, {2}));
  EXPECT_FALSE(d_separated(g, 0, 1, {3}));
  EXPECT_TRUE(d_separated(g, 0, 3, {2}));
}

TEST(Backdoor, ExhaustiveAgainstDefinition) {
  Rng rng(6);
  for (int rep = 0; rep < 25; ++rep) {
    auto g = oracle::random_dag(5, 0.5, rng);
    for (NodeId t = 0; t < 5; ++t)
      for (NodeId y = 0; y < 5; ++y) {
        if (t == y) continue;
        for (const auto& z : subsets_without(5, t, y))
          ASSERT_EQ(is_valid_backdoor(g, t, y, z), oracle::backdoor(g, t, y, z)) << rep;
      }
  }
}

TEST(Backdoor, AsiaExamples) {
  auto g = bundled_graph("asia");
  EXPECT_TRUE(is_valid_backdoor(g, "lung", "dysp", {"smoke"}));
  EXPECT_FALSE(is_valid_backdoor(g, "lung", "dysp", {}));
  EXPECT_FALSE(is_valid_backdoor(g, "lung", "dysp", {"smoke", "either"}));
  EXPECT_TRUE(is_valid_backdoor(g, "tub", "xray", {}));
  EXPECT_THROW(is_valid_backdoor(g, "lung", "nope", {}), UnknownNode);
}

TEST(OrderAdjustment, Predecessors) {
  auto g = bundled_graph("asia");
  auto order = topological_order_of(g);
  auto s = order_adjustment_set(order, "lung", "dysp");
  EXPECT_EQ(s.members, (std::set<std::string>{"asia", "tub", "smoke"}));
  EXPECT_TRUE(is_valid_backdoor(g, "lung", "dysp", s.members));
  auto d = order_adjustment_set(order, "dysp");
  EXPECT_EQ(d.members.size(), 7u);
  EXPECT_THROW(order_adjustment_set(TopologicalOrder({"asia"}), "lung"), UnorderedNode);
  auto p = order_adjustment_set(TopologicalOrder({"asia", "tub", "either"}), "either", "dysp", &g.vars);
  EXPECT_EQ(p.members, (std::set<std::string>{"asia", "tub"}));
  EXPECT_EQ(p.unranked.size(), 5u);
}

TEST(OrderAdjustment, TopologicalOrdersGiveValidSetsOnRandomDags) {
  Rng rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    auto g = oracle::named(oracle::random_dag(6, 0.4, rng));
    auto order = topological_order_of(g);
    for (NodeId t = 0; t < 6; ++t)
      for (NodeId y = 0; y < 6; ++y) {
        if (t == y || oracle::reaches(g.adj, y, t)) continue;
        auto s = order_adjustment_set(order, g.vars.name(t), g.vars.name(y));
        std::vector<NodeId> z;
        for (const auto& m : s.members) z.push_back(g.vars.index(m));
        EXPECT_TRUE(oracle::backdoor(g.adj, t, y, z)) << rep;
      }
  }
}

TEST(MinimalBackdoor, AsiaAndAncestors) {
  auto g = bundled_graph("asia");
  auto s = minimal_backdoor(g, "lung", "dysp");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->members, std::set<std::string>{"smoke"});
  EXPECT_FALSE(minimal_backdoor(g, "dysp", "lung"));
  auto e = minimal_backdoor(g, "either", "xray");
  ASSERT_TRUE(e);
  EXPECT_TRUE(e->members.empty());
}

TEST(Ace, SingleEdge) {
  auto scm = load_scm("scm s\nnode X noise 1\nnode Y noise 1\nedge X -> Y 2\n");
  auto t = sample_linear_scm(scm, 20000, 1);
  auto e = ace_adjusted(t, "X", "Y", {});
  EXPECT_NEAR(e.value, 2.0, 0.05);
  EXPECT_GT(e.stderr_value, 0.0);
  EXPECT_EQ(e.n_used, 20000u);
  EXPECT_DOUBLE_EQ(true_ace(scm, "X", "Y"), 2.0);
  EXPECT_DOUBLE_EQ(true_ace(scm, "X", "Y", 3.0, 1.0), 4.0);
  EXPECT_NEAR(ace_adjusted(t, "X", "Y", {}, 2.0, 0.0).value, 2 * e.value, 1e-9);
}

TEST(Ace, ConfounderNeedsAdjustment) {
  auto scm = load_scm("scm c\nnode Z noise 1\nnode X noise 1\nnode Y noise 1\n"
                      "edge Z -> X 1\nedge Z -> Y 1\nedge X -> Y 0.5\n");
  auto t = sample_linear_scm(scm, 50000, 2);
  // unadjusted slope: 0.5 + Cov(Z,X)/Var(X) = 0.5 + 1/2
  EXPECT_NEAR(ace_adjusted(t, "X", "Y", {}).value, 1.0, 0.05);
  auto adj = ace_adjusted(t, "X", "Y", {"Z"});
  EXPECT_NEAR(adj.value, 0.5, 0.05);
  EXPECT_NEAR(epsilon_ace(adj, true_ace(scm, "X", "Y")), 0.0, 0.05);
}

TEST(Ace, TrueAceSumsPaths) {
  auto scm = load_scm("scm p\nnode X noise 1\nnode M noise 1\nnode Y noise 1\n"
                      "edge X -> M 2\nedge M -> Y 3\nedge X -> Y 1\n");
  EXPECT_DOUBLE_EQ(true_ace(scm, "X", "Y"), 7.0);
  EXPECT_DOUBLE_EQ(true_ace(scm, "Y", "X"), 0.0);
}

TEST(Ace, Errors) {
  auto scm = load_scm("scm s\nnode X noise 1\nnode Y noise 1\nedge X -> Y 2\n");
  auto t = sample_linear_scm(scm, 100, 1);
  EXPECT_THROW(ace_adjusted(t, "X", "Y", {}, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(ace_adjusted(t, "X", "Y", {"Y"}), InvalidArgument);
  EXPECT_THROW(ace_adjusted(t, "X", "Y", {"X"}), InvalidArgument);
  EXPECT_THROW(ace_adjusted(t, "X", "Q", {}), MissingColumn);
  t.columns.push_back("X2");
  t.data.push_back(t.data[0]);
  EXPECT_THROW(ace_adjusted(t, "X", "Y", {"X2"}), SingularDesign);
}

TEST(Ace, CsvRow) {
  AdjustmentSet z;
  z.treatment = "lung";
  z.target = "dysp";
  z.members = {"asia", "smoke"};
  AceEstimate e;
  e.value = 0.25;
  e.stderr_value = 0.5;
  auto row = ace_csv_row(z, e);
  EXPECT_EQ(row.rfind("lung,dysp,\"asia smoke\",", 0), 0u) << row;
  EXPECT_DOUBLE_EQ(epsilon_ace(1.0, 1.5), 0.5);
}

#include "oracles.hpp"

#include <corder/bayes_net.hpp>
#include <corder/bundled.hpp>
#include <corder/discovery.hpp>
#include <corder/effect.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace corder;

namespace {

std::set<std::tuple<NodeId, NodeId, NodeId>> vstructures(const AdjacencyMatrix& g) {
  std::set<std::tuple<NodeId, NodeId, NodeId>> out;
  for (NodeId m = 0; m < g.size(); ++m)
    for (NodeId a = 0; a < g.size(); ++a)
      for (NodeId b = a + 1; b < g.size(); ++b)
        if (g.has_edge(a, m) && g.has_edge(b, m) && !g.adjacent(a, b)) out.insert({a, m, b});
  return out;
}

// Edge u-v is directed in the CPDAG iff every DAG with the same skeleton and
// v-structures orients it the same way; found by trying all orientations.
MixedGraph brute_cpdag(const CausalGraph& dag) {
  auto skel = dag.adj.edges();
  const auto want = vstructures(dag.adj);
  std::vector<int> dir(skel.size(), 0);  // bit 1: seen forward, 2: backward
  for (std::size_t mask = 0; mask < (std::size_t{1} << skel.size()); ++mask) {
    AdjacencyMatrix g(dag.size());
    for (std::size_t e = 0; e < skel.size(); ++e) {
      auto [a, b] = skel[e];
      if (mask >> e & 1) g.add_edge(b, a);
      else g.add_edge(a, b);
    }
    if (!g.is_acyclic() || vstructures(g) != want) continue;
    for (std::size_t e = 0; e < skel.size(); ++e) dir[e] |= (mask >> e & 1) ? 2 : 1;
  }
  MixedGraph out(dag.vars);
  for (std::size_t e = 0; e < skel.size(); ++e) {
    auto [a, b] = skel[e];
    if (dir[e] == 1) out.add_directed(a, b);
    else out.add_undirected(a, b);
  }
  return out;
}

SampleTable table(std::vector<std::string> cols, std::vector<std::vector<double>> data, bool discrete) {
  SampleTable t;
  t.columns = std::move(cols);
  t.data = std::move(data);
  t.discrete = discrete;
  return t;
}

// rows (x, y) repeated count times
void push(SampleTable& t, std::vector<double> row, int count) {
  for (int i = 0; i < count; ++i)
    for (std::size_t c = 0; c < row.size(); ++c) t.data[c].push_back(row[c]);
}

}  // namespace

class SmallBundled : public ::testing::TestWithParam<std::string> {};

TEST_P(SmallBundled, CpdagMatchesEquivalenceClass) {
  auto g = bundled_graph(GetParam());
  EXPECT_EQ(cpdag_of(g), brute_cpdag(g));
}

TEST_P(SmallBundled, OraclePcRecoversCpdag) {
  auto g = bundled_graph(GetParam());
  EXPECT_EQ(pc_cpdag(OracleCiTest(g)), cpdag_of(g));
}

INSTANTIATE_TEST_SUITE_P(Graphs, SmallBundled, ::testing::Values("earthquake", "cancer", "survey", "asia", "asia_m"));

TEST(Cpdag, ChildOraclePc) {
  auto g = bundled_graph("child");
  auto c = pc_cpdag(OracleCiTest(g));
  EXPECT_EQ(c, cpdag_of(g));
  for (auto [a, b] : c.directed_edges()) EXPECT_TRUE(g.adj.has_edge(a, b));
}

TEST(Cpdag, RandomDagsAgainstBruteForce) {
  Rng rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    auto g = oracle::named(oracle::random_dag(6, 0.4, rng));
    if (g.adj.edge_count() > 12) continue;
    auto c = cpdag_of(g);
    ASSERT_EQ(c, brute_cpdag(g)) << rep;
    EXPECT_EQ(pc_cpdag(OracleCiTest(g)), c) << rep;
    EXPECT_TRUE(c.directed_part().is_acyclic());
  }
}

TEST(Meek, RuleOne) {
  MixedGraph g(VariableSet({"a", "b", "c"}));
  g.add_directed(0, 1);
  g.add_undirected(1, 2);
  meek_closure(g);
  EXPECT_TRUE(g.has_directed(1, 2));
}

TEST(Meek, RuleTwo) {
  MixedGraph g(VariableSet({"a", "b", "c"}));
  g.add_directed(0, 1);
  g.add_directed(1, 2);
  g.add_undirected(0, 2);
  meek_closure(g);
  EXPECT_TRUE(g.has_directed(0, 2));
}

TEST(Meek, RuleThree) {
  MixedGraph g(VariableSet({"a", "b", "c", "d"}));
  g.add_undirected(0, 1);
  g.add_undirected(0, 2);
  g.add_undirected(0, 3);
  g.add_directed(2, 1);
  g.add_directed(3, 1);
  meek_closure(g);
  EXPECT_TRUE(g.has_directed(0, 1));
  EXPECT_TRUE(g.has_undirected(0, 2));
  EXPECT_TRUE(g.has_undirected(0, 3));
}

TEST(Meek, UndirectedTriangleStays) {
  MixedGraph g(VariableSet({"a", "b", "c"}));
  g.add_undirected(0, 1);
  g.add_undirected(1, 2);
  g.add_undirected(0, 2);
  auto before = g;
  meek_closure(g);
  EXPECT_EQ(g, before);
}

TEST(OrientWithOrder, FullOrder) {
  auto g = bundled_graph("asia");
  auto c = cpdag_of(g);
  auto r = orient_with_order(c, topological_order_of(g), nullptr);
  EXPECT_EQ(r.graph, g);
  EXPECT_FALSE(r.cycle);
  EXPECT_EQ(r.fallback_calls, 0u);
}

TEST(OrientWithOrder, FallbackForUnrankedNodes) {
  CausalGraph chain(VariableSet({"a", "b", "c"}));
  chain.add_edge("a", "b");
  chain.add_edge("b", "c");
  auto c = cpdag_of(chain);
  ASSERT_EQ(c.undirected_edges().size(), 2u);
  TopologicalOrder partial({"a", "b"});
  EXPECT_THROW(orient_with_order(c, partial, nullptr), InvalidArgument);
  PerfectExpert e(chain);
  auto r = orient_with_order(c, partial, &e);
  EXPECT_EQ(r.graph, chain);
  EXPECT_EQ(r.fallback_calls, 1u);

  CausalGraph other(chain.vars);
  other.add_edge("a", "b");
  PerfectExpert says_none(other);
  auto d = orient_with_order(c, partial, &says_none);
  EXPECT_EQ(d.dropped, (std::vector<NamedEdge>{{"b", "c"}}));
  EXPECT_EQ(d.graph.adj.edge_count(), 1u);
}

TEST(OrientWithOrder, ReportsCycle) {
  MixedGraph m(VariableSet({"a", "b", "c"}));
  m.add_directed(0, 1);
  m.add_undirected(1, 2);
  m.add_undirected(0, 2);
  auto r = orient_with_order(m, TopologicalOrder({"b", "c", "a"}), nullptr);
  ASSERT_TRUE(r.cycle);
  EXPECT_EQ(r.cycle->size(), 3u);
}

TEST(ChiSquared, PValueMatchesHandComputation) {
  auto t = table({"x", "y"}, {{}, {}}, true);
  push(t, {0, 0}, 30);
  push(t, {0, 1}, 10);
  push(t, {1, 0}, 20);
  push(t, {1, 1}, 40);
  ChiSquaredTest ct(t, 0.05);
  // expected cells 20 20 30 30
  const double stat = 100.0 / 20 + 100.0 / 20 + 100.0 / 30 + 100.0 / 30;
  EXPECT_NEAR(ct.p_value(0, 1, {}), std::erfc(std::sqrt(stat / 2)), 1e-12);
  EXPECT_FALSE(ct.independent(0, 1, {}));
}

TEST(ChiSquared, StrataAddUp) {
  auto t = table({"x", "y", "z"}, {{}, {}, {}}, true);
  push(t, {0, 0, 0}, 30);
  push(t, {0, 1, 0}, 10);
  push(t, {1, 0, 0}, 20);
  push(t, {1, 1, 0}, 40);
  push(t, {0, 0, 1}, 25);
  push(t, {0, 1, 1}, 25);
  push(t, {1, 0, 1}, 25);
  push(t, {1, 1, 1}, 25);
  ChiSquaredTest ct(t, 0.05);
  const double stat = 100.0 / 20 + 100.0 / 20 + 100.0 / 30 + 100.0 / 30;
  // two degrees of freedom: survival function is exp(-s/2)
  EXPECT_NEAR(ct.p_value(0, 1, {2}), std::exp(-stat / 2), 1e-12);
}

TEST(ChiSquared, Degenerate) {
  EXPECT_THROW(ChiSquaredTest(table({"x"}, {{}}, true), 0.05), DegenerateData);
  EXPECT_THROW(ChiSquaredTest(table({"x", "y"}, {{1, 1, 1}, {0, 1, 0}}, true), 0.05), DegenerateData);
}

TEST(FisherZ, PartialCorrelationAgainstClosedForm) {
  auto scm = load_scm("scm t\nnode Z noise 1\nnode X noise 1\nnode Y noise 1\nedge Z -> X 0.8\nedge Z -> Y 1.2\n"
                      "edge X -> Y 0.3\n");
  auto t = sample_linear_scm(scm, 5000, 8);
  FisherZTest ft(t, 0.05);
  auto corr = [&](std::size_t a, std::size_t b) {
    const auto &u = t.data[a], &v = t.data[b];
    double mu = 0, mv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) mu += u[i], mv += v[i];
    mu /= u.size(), mv /= v.size();
    double suv = 0, suu = 0, svv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      suv += (u[i] - mu) * (v[i] - mv);
      suu += (u[i] - mu) * (u[i] - mu);
      svv += (v[i] - mv) * (v[i] - mv);
    }
    return suv / std::sqrt(suu * svv);
  };
  const auto x = t.column_index("X"), y = t.column_index("Y"), z = t.column_index("Z");
  double rxy = corr(x, y), rxz = corr(x, z), ryz = corr(y, z);
  double partial = (rxy - rxz * ryz) / std::sqrt((1 - rxz * rxz) * (1 - ryz * ryz));
  EXPECT_NEAR(ft.partial_correlation(x, y, {z}), partial, 1e-9);
  EXPECT_NEAR(ft.partial_correlation(x, y, {}), rxy, 1e-9);
  double stat = std::sqrt(5000.0 - 1 - 3) * std::atanh(partial);
  EXPECT_NEAR(ft.p_value(x, y, {z}), std::erfc(std::abs(stat) / std::sqrt(2.0)), 1e-9);
}

TEST(Pc, FisherZRecoversColliderFromData) {
  auto scm = load_scm("scm v\nnode X noise 1\nnode Y noise 1\nnode Z noise 1\nnode W noise 1\n"
                      "edge X -> Z 1\nedge Y -> Z 1\nedge Z -> W 1\n");
  auto t = sample_linear_scm(scm, 20000, 2);
  CiTestConfig cfg;
  cfg.test = CiTestKind::FisherZ;
  cfg.alpha = 0.01;
  EXPECT_EQ(pc_cpdag(t, cfg), cpdag_of(scm.graph()));
}

TEST(Pc, ConfigValidation) {
  CiTestConfig cfg;
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.alpha = 0.05;
  cfg.test = CiTestKind::Oracle;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Pc, MaxCondSizeZeroKeepsMarginalDependence) {
  auto g = bundled_graph("cancer");
  // only empty conditioning sets: every marginally dependent pair stays adjacent
  auto c = pc_cpdag(OracleCiTest(g), 0);
  for (NodeId a = 0; a < g.size(); ++a)
    for (NodeId b = a + 1; b < g.size(); ++b)
      EXPECT_EQ(c.adjacent(a, b), !oracle::d_separated(g.adj, a, b, {})) << a << "," << b;
}

TEST(LevelPrior, ExportAndRoundTrip) {
  auto g = bundled_graph("asia");
  auto p = export_level_prior(g, 0.9);
  EXPECT_EQ(p.levels, level_order_of(g));
  auto q = parse_level_prior(write_level_prior(p));
  EXPECT_EQ(q.levels, p.levels);
  EXPECT_DOUBLE_EQ(q.prob, 0.9);
  EXPECT_THROW(export_level_prior(g, 0.0), InvalidArgument);
  EXPECT_THROW(parse_level_prior("level 0: a\n"), ParseError);
}

TEST(LevelPrior, CycleSharesALevel) {
  CausalGraph g(VariableSet({"a", "b", "c", "d"}));
  g.add_edge("a", "b");
  g.add_edge("b", "c");
  g.add_edge("c", "b");
  g.add_edge("c", "d");
  auto p = export_level_prior(g, 1.0);
  EXPECT_EQ(p.levels.level("a"), 0);
  EXPECT_EQ(p.levels.level("b"), 1);
  EXPECT_EQ(p.levels.level("c"), 1);
  EXPECT_EQ(p.levels.level("d"), 2);
}

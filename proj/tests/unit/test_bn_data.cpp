#include "oracles.hpp"

#include <corder/bayes_net.hpp>
#include <corder/bundled.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace corder;

namespace {

const char* kTiny = R"(bn tiny
context: two coins

node A {
  description: first coin
  states: h, t
  parents:
  cpt:
    0.3 0.7
}

node B {
  states: h, t
  parents: A
  cpt:
    0.9 0.1
    0.2 0.8
}
)";

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance(const std::vector<double>& v) {
  double m = mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST(BundledGraphs, NamesAndSizes) {
  const std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> expect = {
      {"earthquake", {5, 4}}, {"cancer", {5, 4}}, {"survey", {6, 6}},
      {"asia", {8, 8}},       {"asia_m", {7, 8}}, {"child", {20, 25}}};
  ASSERT_EQ(bundled_graph_names().size(), expect.size());
  for (const auto& [name, ne] : expect) {
    auto g = bundled_graph(name);
    EXPECT_EQ(g.size(), ne.first) << name;
    EXPECT_EQ(g.adj.edge_count(), ne.second) << name;
    EXPECT_TRUE(g.adj.is_acyclic()) << name;
    EXPECT_FALSE(bundled_context(name).empty()) << name;
    bundled_bn(name).validate();
  }
  EXPECT_THROW(bundled_graph("nope"), UnknownGraph);
}

TEST(BundledGraphs, AsiaEdges) {
  auto g = bundled_graph("asia");
  for (auto [a, b] : std::vector<std::pair<const char*, const char*>>{{"asia", "tub"},
                                                                      {"smoke", "lung"},
                                                                      {"smoke", "bronc"},
                                                                      {"tub", "either"},
                                                                      {"lung", "either"},
                                                                      {"either", "xray"},
                                                                      {"either", "dysp"},
                                                                      {"bronc", "dysp"}})
    EXPECT_TRUE(g.has_edge(a, b)) << a << "->" << b;
}

TEST(LoadBn, ParsesAndRoundTrips) {
  auto bn = load_bn(kTiny);
  EXPECT_EQ(bn.name, "tiny");
  EXPECT_EQ(bn.context, "two coins");
  EXPECT_EQ(bn.vars.description(0), "first coin");
  EXPECT_EQ(bn.parents[1], std::vector<NodeId>{0});
  EXPECT_DOUBLE_EQ(bn.cpt[1][1][1], 0.8);
  auto again = load_bn(write_bn(bn));
  EXPECT_EQ(again.vars, bn.vars);
  EXPECT_EQ(again.cpt, bn.cpt);
  EXPECT_EQ(again.parents, bn.parents);
}

TEST(LoadBn, BundledRoundTrip) {
  for (const auto& name : bundled_graph_names()) {
    auto bn = bundled_bn(name);
    auto again = load_bn(write_bn(bn));
    EXPECT_EQ(again.graph(), bn.graph()) << name;
    EXPECT_EQ(again.cpt, bn.cpt) << name;
  }
}

TEST(LoadBn, Errors) {
  std::string bad_sum = kTiny;
  bad_sum.replace(bad_sum.find("0.2 0.8"), 7, "0.2 0.7");
  EXPECT_THROW(load_bn(bad_sum), CptRowSum);

  std::string rows = kTiny;
  rows.replace(rows.find("    0.2 0.8\n"), 12, "");
  EXPECT_THROW(load_bn(rows), Error);

  std::string cyc = kTiny;
  cyc.replace(cyc.find("parents:\n"), 9, "parents: B\n");
  cyc.replace(cyc.find("    0.3 0.7\n"), 12, "    0.3 0.7\n    0.5 0.5\n");
  EXPECT_THROW(load_bn(cyc), CyclicParents);

  EXPECT_THROW(load_bn("node A {\n"), ParseError);
}

TEST(ForwardSample, DeterministicPerSeed) {
  auto bn = bundled_bn("asia");
  auto a = forward_sample(bn, 500, 11);
  auto b = forward_sample(bn, 500, 11);
  auto c = forward_sample(bn, 500, 12);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, c.data);
  EXPECT_TRUE(a.discrete);
  EXPECT_EQ(a.columns, bn.vars.names());
}

TEST(ForwardSample, MarginalsMatchEnumeration) {
  auto bn = bundled_bn("cancer");
  const std::size_t n = 40000;
  auto t = forward_sample(bn, n, 5);
  // exact P(Cancer = state 0) by enumerating the two root parents
  const auto& pol = bn.cpt[bn.vars.index("Pollution")][0];
  const auto& smk = bn.cpt[bn.vars.index("Smoker")][0];
  const auto& can = bn.cpt[bn.vars.index("Cancer")];
  double p = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) p += pol[i] * smk[j] * can[i * 2 + j][0];
  double freq = 0;
  for (double v : t.column("Cancer")) freq += v == 0 ? 1 : 0;
  freq /= n;
  EXPECT_NEAR(freq, p, 4 * std::sqrt(p * (1 - p) / n));
  double fp = 0;
  for (double v : t.column("Pollution")) fp += v == 0 ? 1 : 0;
  fp /= n;
  EXPECT_NEAR(fp, pol[0], 4 * std::sqrt(pol[0] * (1 - pol[0]) / n));
}

TEST(LinearScm, ParseSampleAndMoments) {
  auto scm = load_scm("scm chain\nnode X noise 1\nnode Y noise 0.5\nedge X -> Y 2\n");
  EXPECT_DOUBLE_EQ(scm.coefficient(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(scm.coefficient(1, 0), 0.0);
  auto t = sample_linear_scm(scm, 100000, 3);
  EXPECT_FALSE(t.discrete);
  // Var(Y) = 4 * 1 + 0.25
  EXPECT_NEAR(variance(t.column("Y")), 4.25, 0.1);
  EXPECT_NEAR(mean(t.column("X")), 0.0, 0.02);
  auto again = load_scm(write_scm(scm));
  EXPECT_EQ(again.graph(), scm.graph());
  EXPECT_EQ(again.coeff, scm.coeff);
  EXPECT_EQ(again.noise_std, scm.noise_std);
}

TEST(LinearScm, Errors) {
  EXPECT_THROW(load_scm("scm s\nnode X noise 1\nedge X -> Z 1\n"), Error);
  EXPECT_THROW(load_scm("scm s\nnode X noise -1\n"), Error);
  EXPECT_THROW(load_scm("scm s\nnode X noise 1\nnode Y noise 1\nedge X -> Y 1\nedge Y -> X 1\n"), Error);
}

TEST(LinearScm, RandomCoefficientsInRange) {
  auto g = bundled_graph("asia");
  auto a = random_linear_scm(g, 9);
  auto b = random_linear_scm(g, 9);
  EXPECT_EQ(a.coeff, b.coeff);
  EXPECT_EQ(a.coeff.size(), g.adj.edge_count());
  for (const auto& [e, c] : a.coeff) {
    EXPECT_GE(std::abs(c), 0.5);
    EXPECT_LE(std::abs(c), 1.5);
  }
}

TEST(Csv, RoundTripDiscreteAndContinuous) {
  auto d = forward_sample(bundled_bn("survey"), 50, 1);
  auto d2 = read_csv(write_csv(d));
  EXPECT_TRUE(d2.discrete);
  EXPECT_EQ(d2.columns, d.columns);
  EXPECT_EQ(d2.data, d.data);

  auto c = sample_linear_scm(random_linear_scm(bundled_graph("cancer"), 2), 20, 4);
  auto c2 = read_csv(write_csv(c));
  EXPECT_FALSE(c2.discrete);
  EXPECT_EQ(c2.data, c.data);
}

TEST(Csv, Errors) {
  EXPECT_THROW(read_csv("a,b\n1\n"), ParseError);
  EXPECT_THROW(read_csv("a,b\n1,x\n"), ParseError);
  SampleTable t;
  t.columns = {"a"};
  t.data = {{1}};
  EXPECT_THROW(t.column_index("b"), MissingColumn);
}

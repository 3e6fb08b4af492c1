#include "oracles.hpp"

#include <corder/bundled.hpp>
#include <corder/expert.hpp>
#include <corder/sims.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>

using namespace corder;

namespace {

// Exact third-pair error by expanding every answer sequence of the sequential
// epsilon-expert on (2,0), (2,1), (0,1), written out by hand.
double third_pair_error(const AdjacencyMatrix& truth, double eps) {
  auto truth_choice = [&](NodeId a, NodeId b, NodeId c) {
    AdjacencyMatrix cut(3);
    for (auto [x, y] : truth.edges())
      if (x != c && y != c) cut.add_edge(x, y);
    return oracle::reaches(cut, a, b) ? 0 : oracle::reaches(cut, b, a) ? 1 : 2;
  };
  const NodeId seq[3][3] = {{2, 0, 1}, {2, 1, 0}, {0, 1, 2}};
  double err = 0;
  for (int c0 = 0; c0 < 3; ++c0)
    for (int c1 = 0; c1 < 3; ++c1)
      for (int c2 = 0; c2 < 3; ++c2) {
        const int picks[3] = {c0, c1, c2};
        AdjacencyMatrix g(3);
        double p = 1;
        for (int s = 0; s < 3 && p > 0; ++s) {
          NodeId a = seq[s][0], b = seq[s][1];
          int right = truth_choice(a, b, seq[s][2]);
          double w[3];
          for (int k = 0; k < 3; ++k) w[k] = k == right ? 1 - eps : eps / 2;
          if (oracle::reaches(g, b, a)) w[0] = 0;  // a->b would close a cycle
          if (oracle::reaches(g, a, b)) w[1] = 0;
          double total = w[0] + w[1] + w[2];
          p *= w[picks[s]] / total;
          if (picks[s] == 0) g.add_edge(a, b);
          if (picks[s] == 1) g.add_edge(b, a);
        }
        if (p > 0 && c2 != truth_choice(0, 1, 2)) err += p;
      }
  return err;
}

}  // namespace

TEST(Stats, DescribeAndSpearman) {
  auto s = describe({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {10, 20, 30}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {3, 2, 1}), -1.0);
  // average ranks 1.5 1.5 3 against 1 2 3
  EXPECT_NEAR(spearman({1, 1, 2}, {1, 2, 3}), std::sqrt(3.0) / 2, 1e-12);
  EXPECT_DOUBLE_EQ(spearman({1, 1, 1}, {1, 2, 3}), 0.0);
}

TEST(ClosureShd, MatchesBruteForce) {
  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    auto g = oracle::random_dag(7, 0.35, rng);
    EXPECT_EQ(closure_shd(g), oracle::closure_edges(g) - g.edge_count());
  }
}

TEST(DagCount, LabelledAndUnlabelled) {
  auto t = three_node_dags();
  EXPECT_EQ(t.size(), 25u);
  for (const auto& g : t) EXPECT_TRUE(g.is_acyclic());
  EXPECT_EQ(dag_classes(1).size(), 1u);
  EXPECT_EQ(dag_classes(2).size(), 2u);
  EXPECT_EQ(dag_classes(3).size(), 6u);
  EXPECT_EQ(dag_classes(4).size(), 31u);
  EXPECT_EQ(dag_classes(5).size(), 302u);
  for (const auto& g : dag_classes(4))
    for (auto [a, b] : g.edges()) EXPECT_LT(a, b);
  EXPECT_THROW(dag_classes(7), InvalidArgument);
}

TEST(Prop4, ClosedFormValue) {
  EXPECT_NEAR(prop4_closed_form(0.3), 0.3 * (0.27 - 9 + 52) / 3.4 / 25, 1e-15);
  EXPECT_NEAR(prop4_closed_form(0.3), 0.152718, 1e-6);
  EXPECT_DOUBLE_EQ(prop4_closed_form(0.0), 0.0);
}

TEST(Prop4, ExactMatchesHandEnumeration) {
  for (double eps : {0.05, 0.1, 0.3, 0.5, 0.9}) {
    double sum = 0;
    auto dags = three_node_dags();
    for (const auto& g : dags) sum += third_pair_error(g, eps);
    EXPECT_NEAR(prop4_exact(eps), sum / dags.size(), 1e-12) << eps;
  }
}

TEST(Prop4, SimulationAgreesWithExact) {
  auto r = sim_prop4(0.3, 200000, 11, 4, false);
  const double exact = prop4_exact(0.3);
  EXPECT_NEAR(r.value("empirical"), exact, 4 * std::sqrt(exact * (1 - exact) / 200000));
  EXPECT_DOUBLE_EQ(r.value("exact"), exact);
  EXPECT_EQ(r.n_records(), 0u);
}

TEST(Prop4, WorkerCountDoesNotChangeResult) {
  auto a = sim_prop4(0.2, 30000, 5, 1);
  auto b = sim_prop4(0.2, 30000, 5, 6);
  EXPECT_EQ(a.value("errors"), b.value("errors"));
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_THROW(sim_prop4(0.0, 10, 1), InvalidArgument);
  EXPECT_THROW(sim_prop4(0.2, 0, 1), InvalidArgument);
}

TEST(Prop23, HoldsOnSmallClasses) {
  for (std::size_t n : {2u, 3u, 4u}) {
    auto r = check_prop23(n);
    EXPECT_EQ(r.graphs, dag_classes(n).size());
    std::size_t fact = 1;
    for (std::size_t i = 2; i <= n; ++i) fact *= i;
    EXPECT_EQ(r.orders, r.graphs * fact);
    EXPECT_EQ(r.prop2_failures, 0u) << n;
    EXPECT_EQ(r.prop3_failures, 0u) << n;
    std::size_t topo = 0;
    for (const auto& g : dag_classes(n)) topo += oracle::all_topological_orders(g).size();
    EXPECT_EQ(r.topological, topo);
  }
}

TEST(ShdVariance, FamilyMatchesBruteForce) {
  const std::size_t n = 4;
  ShdVarianceOptions opt;
  opt.truths = 6;
  auto rep = sim_shd_variance(n, 21, opt);
  ASSERT_EQ(rep.n_records(), 6u);
  // every labelled DAG on n nodes, kept if its own order respects the truth
  std::vector<CausalGraph> all;
  const std::size_t npairs = n * (n - 1) / 2;
  for (std::size_t code = 0; code < std::pow(3, npairs); ++code) {
    AdjacencyMatrix g(n);
    std::size_t c = code;
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b, c /= 3) {
        if (c % 3 == 1) g.add_edge(a, b);
        if (c % 3 == 2) g.add_edge(b, a);
      }
    if (g.is_acyclic()) all.push_back(oracle::named(g));
  }
  ASSERT_EQ(all.size(), 543u);
  for (std::size_t t = 0; t < opt.truths; ++t) {
    Rng rng(mix_seed(21, t));
    auto truth = random_dag(n, 0.5, rng);
    std::size_t count = 0, lo = 99, hi = 0;
    for (const auto& cand : all) {
      if (dtop(topological_order_of(cand), truth) != 0) continue;
      ++count;
      auto d = shd(cand.adj, truth.adj);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    EXPECT_EQ(rep.column("edges")[t], double(truth.adj.edge_count()));
    EXPECT_EQ(rep.column("family_size")[t], double(count)) << t;
    EXPECT_EQ(rep.column("shd_min")[t], double(lo)) << t;
    EXPECT_EQ(rep.column("shd_max")[t], double(hi)) << t;
    EXPECT_EQ(rep.column("closure_in_family")[t], 1.0);
  }
  EXPECT_THROW(sim_shd_variance(2, 1), InvalidArgument);
}

TEST(PerfectSim, BundledGraphs) {
  for (const auto& name : bundled_graph_names()) {
    auto g = bundled_graph(name);
    auto r = sim_perfect_expert(g);
    EXPECT_EQ(r.value("dtop"), 0.0) << name;
    EXPECT_EQ(r.value("shd"), double(oracle::closure_edges(g.adj) - g.adj.edge_count())) << name;
  }
}

TEST(TripletVsPairwise, SmallRunInvariants) {
  NoisyComparisonOptions opt;
  opt.nodes = 5;
  opt.seeds = 12;
  opt.epsilon = 0.3;
  auto a = sim_triplet_vs_pairwise(opt, 3);
  auto b = sim_triplet_vs_pairwise(opt, 3);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.n_records(), 12u);
  EXPECT_EQ(a.value("max_cycles_triplet_final"), 0.0);
  for (double t : a.column("third_slot_total")) EXPECT_EQ(t, 10.0);
  auto j = nlohmann::json::parse(a.to_json());
  EXPECT_EQ(j["name"], "triplet-vs-pairwise");
  EXPECT_THROW(a.value("nope"), InvalidArgument);
}

TEST(MetricCorrelation, SmallRun) {
  MetricCorrelationOptions opt;
  opt.orders_per_seed = 4;
  opt.samples = 2000;
  auto r = sim_metric_correlation({"cancer"}, {0, 1}, opt);
  EXPECT_EQ(r.n_records(), 8u);
  for (double d : r.column("eps_ace")) EXPECT_GE(d, 0.0);
  EXPECT_EQ(r.to_csv(), sim_metric_correlation({"cancer"}, {0, 1}, opt).to_csv());
  auto csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "graph,seed,order,dtop,shd,eps_ace");
}

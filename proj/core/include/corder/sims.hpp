#pragma once

#include <corder/graph.hpp>
#include <corder/random.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace corder {

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double min = 0.0;
  double max = 0.0;
};

Stats describe(const std::vector<double>& xs);

/// Spearman rank correlation with average ranks for ties; 0 if either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct SimReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> parameters;
  /// Per-trial records, column-major.
  std::vector<std::string> columns;
  std::vector<std::vector<double>> records;
  std::vector<std::pair<std::string, double>> summary;

  std::size_t n_records() const { return records.empty() ? 0 : records.front().size(); }
  const std::vector<double>& column(const std::string& name) const;
  /// Throws InvalidArgument if absent.
  double value(const std::string& key) const;
  void add_column_stats(const std::string& column);

  std::string to_json() const;
  std::string to_csv() const;
};

/// Σ_i |de(i)| − |ch(i)|: SHD between a DAG and its transitive closure.
std::size_t closure_shd(const AdjacencyMatrix& g);

/// Upper-triangular edges with probability p, relabelled by a random permutation.
CausalGraph random_dag(std::size_t n, double p, Rng& rng);

/// One representative per isomorphism class of DAGs on n ≤ 6 nodes, each
/// with the identity as a topological order.
std::vector<AdjacencyMatrix> dag_classes(std::size_t n);

/// Pairwise pipeline with the perfect expert; throws AssertionFailure unless
/// D_top = 0 and SHD = closure_shd.
SimReport sim_perfect_expert(const CausalGraph& graph);

struct ShdVarianceOptions {
  std::size_t truths = 20;
  std::size_t samples = 100000;  // n = 7 only
};

/// DAGs on the truth's nodes whose own (index tie-broken) topological order
/// has D_top 0 against the truth; enumerated for n ≤ 6, sampled for n = 7.
SimReport sim_shd_variance(std::size_t n, std::uint64_t seed, const ShdVarianceOptions& opt = {});

/// Reference curve (1/25)·ε(3ε²−30ε+52)/(4−2ε).
double prop4_closed_form(double epsilon);
/// Exact third-pair error of the sequential epsilon-expert averaged over the
/// 25 labelled three-node DAGs.
double prop4_exact(double epsilon);
/// The 25 labelled DAGs on three nodes.
std::vector<AdjacencyMatrix> three_node_dags();

/// Third-pair error of the sequential tuple orientation over uniformly drawn
/// three-node DAGs. Trial t uses its own stream, so results do not depend on
/// `workers`. With keep_records, one record per trial.
SimReport sim_prop4(double epsilon, std::size_t trials, std::uint64_t seed, std::size_t workers = 1,
                    bool keep_records = true);

struct MetricCorrelationOptions {
  std::size_t orders_per_seed = 12;
  std::size_t samples = 10000;
  double extra_edge_prob = 0.2;
};

/// Linear SCMs over the named bundled structures; per perturbed order:
/// (D_top, SHD, mean ε_ACE over downstream pairs).
SimReport sim_metric_correlation(const std::vector<std::string>& graphs, const std::vector<std::uint64_t>& seeds,
                                 const MetricCorrelationOptions& opt = {});

struct NoisyComparisonOptions {
  double epsilon = 0.3;
  std::size_t nodes = 6;
  std::size_t seeds = 200;
  double edge_prob = 0.5;
};

/// Triplet vs pairwise elicitation with epsilon-experts on random DAGs.
SimReport sim_triplet_vs_pairwise(const NoisyComparisonOptions& opt, std::uint64_t seed);

struct Prop23Result {
  std::size_t graphs = 0;
  std::size_t orders = 0;           // permutations examined
  std::size_t topological = 0;      // of which topological
  std::size_t prop2_failures = 0;   // topological order with an invalid set
  std::size_t prop3_failures = 0;   // biconditional broken
};

/// Every DAG class on n nodes against every permutation: order-derived sets
/// valid for all downstream pairs iff the order is topological.
Prop23Result check_prop23(std::size_t n);

}  // namespace corder

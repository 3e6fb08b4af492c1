#pragma once

#include <corder/bayes_net.hpp>
#include <corder/expert.hpp>
#include <corder/graph.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace corder {

enum class CiTestKind { ChiSquared, FisherZ, Oracle };

struct CiTestConfig {
  double alpha = 0.05;
  CiTestKind test = CiTestKind::ChiSquared;
  /// Largest conditioning set; negative means unbounded.
  int max_cond_size = -1;
  /// Required for the oracle test.
  std::optional<CausalGraph> oracle;

  /// Throws InvalidArgument.
  void validate() const;
};

class CiTest {
 public:
  virtual ~CiTest() = default;
  /// Must be safe to call concurrently.
  virtual bool independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const = 0;
  virtual const VariableSet& vars() const = 0;
};

/// Pearson chi-squared on discrete data, stratified by z.
class ChiSquaredTest : public CiTest {
 public:
  /// Throws DegenerateData on an empty table or a constant column.
  ChiSquaredTest(const SampleTable& data, double alpha);
  bool independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const override;
  const VariableSet& vars() const override { return vars_; }
  double p_value(NodeId x, NodeId y, const std::vector<NodeId>& z) const;

 private:
  VariableSet vars_;
  std::vector<std::vector<int>> codes_;
  std::vector<int> levels_;
  double alpha_;
};

/// Fisher z-transform of the partial correlation.
class FisherZTest : public CiTest {
 public:
  /// Throws DegenerateData on an empty table or a constant column.
  FisherZTest(const SampleTable& data, double alpha);
  bool independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const override;
  const VariableSet& vars() const override { return vars_; }
  double p_value(NodeId x, NodeId y, const std::vector<NodeId>& z) const;
  double partial_correlation(NodeId x, NodeId y, const std::vector<NodeId>& z) const;

 private:
  VariableSet vars_;
  std::vector<double> corr_;  // n x n
  std::size_t rows_;
  double alpha_;
};

/// Exact d-separation in a known graph.
class OracleCiTest : public CiTest {
 public:
  explicit OracleCiTest(CausalGraph truth) : truth_(std::move(truth)) {}
  bool independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const override;
  const VariableSet& vars() const override { return truth_.vars; }

 private:
  CausalGraph truth_;
};

std::unique_ptr<CiTest> make_ci_test(const SampleTable& data, const CiTestConfig& cfg);

/// PC-stable skeleton, v-structures, then Meek rules 1-4 to a fixpoint.
MixedGraph pc_cpdag(const CiTest& test, int max_cond_size = -1);
/// Throws DegenerateData.
MixedGraph pc_cpdag(const SampleTable& data, const CiTestConfig& cfg);

/// Applies Meek rules 1-4 until nothing changes; never creates a directed cycle.
void meek_closure(MixedGraph& g);

/// True CPDAG of a DAG: skeleton, its v-structures, Meek closure.
MixedGraph cpdag_of(const CausalGraph& dag);

struct OrientResult {
  CausalGraph graph;
  /// Witness when the oriented graph contains a directed cycle.
  std::optional<std::vector<std::string>> cycle;
  std::size_t fallback_calls = 0;
  /// Undirected edges the fallback expert judged absent.
  std::vector<NamedEdge> dropped;
};

/// Orients each undirected edge by the order when both ends are ranked,
/// otherwise by one pairwise query to `fallback` (may be null if the order
/// ranks everything; throws InvalidArgument otherwise).
OrientResult orient_with_order(const MixedGraph& cpdag, const TopologicalOrder& order, Expert* fallback,
                               const std::string& context = {});

struct LevelPrior {
  LevelOrder levels;
  double prob = 1.0;
};

/// Nodes sharing a strongly connected component share the smallest level of
/// the condensation; acyclic input gives level_order_of.
LevelPrior export_level_prior(const CausalGraph& graph, double prob);
/// `prob <p>` then `level <k>: a b ...` ascending.
std::string write_level_prior(const LevelPrior& prior);
LevelPrior parse_level_prior(std::string_view text);

}  // namespace corder

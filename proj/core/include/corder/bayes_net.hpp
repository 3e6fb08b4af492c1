#pragma once

#include <corder/graph.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace corder {

/// Discrete Bayesian network. CPT rows are indexed row-major over the parent
/// states (last parent varies fastest); each row holds one probability per state.
struct BayesNet {
  std::string name;
  std::string context;
  VariableSet vars;
  std::vector<std::vector<NodeId>> parents;
  std::vector<std::vector<std::string>> states;
  std::vector<std::vector<std::vector<double>>> cpt;  // [node][row][state]

  std::size_t size() const noexcept { return vars.size(); }
  std::size_t cardinality(NodeId node) const { return states.at(node).size(); }
  CausalGraph graph() const;
  /// Row of `node`'s CPT selected by the parent states in a full assignment.
  std::size_t row_index(NodeId node, const std::vector<int>& assignment) const;
  /// Throws CptRowSum, CyclicParents or ShapeMismatch.
  void validate() const;
};

/// Linear-Gaussian SCM: X_j = sum_i coeff(i, j) X_i + N(0, noise_std_j^2).
struct LinearScm {
  std::string name;
  VariableSet vars;
  AdjacencyMatrix adj;
  std::map<Edge, double> coeff;
  std::vector<double> noise_std;

  std::size_t size() const noexcept { return vars.size(); }
  CausalGraph graph() const { return CausalGraph(vars, adj); }
  double coefficient(NodeId from, NodeId to) const;
  void set_edge(NodeId from, NodeId to, double c);
};

/// Column-major table. Discrete tables hold state indices as doubles.
struct SampleTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;
  bool discrete = false;

  std::size_t n_rows() const noexcept { return data.empty() ? 0 : data.front().size(); }
  std::size_t n_cols() const noexcept { return columns.size(); }
  /// Throws MissingColumn.
  std::size_t column_index(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const { return data[column_index(name)]; }
};

/// Throws ParseError, CptRowSum, CyclicParents.
BayesNet load_bn(std::string_view document);
std::string write_bn(const BayesNet& bn);

SampleTable forward_sample(const BayesNet& bn, std::size_t n, std::uint64_t seed);

/// Format: `scm <name>`, `node <name> noise <std>`, `edge <a> -> <b> <coeff>`.
LinearScm load_scm(std::string_view document);
std::string write_scm(const LinearScm& scm);

SampleTable sample_linear_scm(const LinearScm& scm, std::size_t n, std::uint64_t seed);

/// Coefficients drawn uniformly from +-[lo, hi], unit noise.
LinearScm random_linear_scm(const CausalGraph& g, std::uint64_t seed, double lo = 0.5, double hi = 1.5);

std::string write_csv(const SampleTable& t);
/// All-integer columns make a discrete table.
SampleTable read_csv(std::string_view text);

}  // namespace corder

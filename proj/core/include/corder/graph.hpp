#pragma once

#include <corder/error.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace corder {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Ordered set of uniquely named variables with optional free-text descriptions.
/// A name's index never changes after construction.
class VariableSet {
 public:
  VariableSet() = default;
  explicit VariableSet(std::vector<std::string> names, std::vector<std::string> descriptions = {});

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

  const std::string& name(NodeId id) const { return names_.at(id); }
  const std::string& description(NodeId id) const { return descriptions_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<std::string>& descriptions() const noexcept { return descriptions_; }

  std::optional<NodeId> find(std::string_view name) const;
  /// Throws UnknownNode.
  NodeId index(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  /// Appends a name; throws InvalidArgument on duplicates or empty names.
  NodeId add(std::string name, std::string description = {});
  void set_description(NodeId id, std::string description) { descriptions_.at(id) = std::move(description); }

  friend bool operator==(const VariableSet& a, const VariableSet& b) {
    return a.names_ == b.names_ && a.descriptions_ == b.descriptions_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::string> descriptions_;
  std::map<std::string, NodeId, std::less<>> index_;
};

/// Dense n x n directed adjacency; bit (i, j) set iff edge i -> j.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n) : n_(n), bits_(n * n, 0) {}
  AdjacencyMatrix(std::size_t n, const std::vector<Edge>& edges);

  std::size_t size() const noexcept { return n_; }

  bool has_edge(NodeId from, NodeId to) const { return bits_[from * n_ + to] != 0; }
  bool adjacent(NodeId a, NodeId b) const { return has_edge(a, b) || has_edge(b, a); }
  /// Throws InvalidArgument on self-loops or out-of-range ids.
  void add_edge(NodeId from, NodeId to);
  void remove_edge(NodeId from, NodeId to) { bits_.at(from * n_ + to) = 0; }

  std::size_t edge_count() const;
  /// Edges in row-major (from, to) order.
  std::vector<Edge> edges() const;
  std::vector<NodeId> parents(NodeId node) const;
  std::vector<NodeId> children(NodeId node) const;
  std::size_t degree(NodeId node) const;

  bool is_acyclic() const;

  friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Directed graph over named variables. Node identity is the name.
struct CausalGraph {
  VariableSet vars;
  AdjacencyMatrix adj;

  CausalGraph() = default;
  explicit CausalGraph(VariableSet v) : vars(std::move(v)), adj(vars.size()) {}
  CausalGraph(VariableSet v, AdjacencyMatrix a);

  std::size_t size() const noexcept { return vars.size(); }
  void add_edge(std::string_view from, std::string_view to) { adj.add_edge(vars.index(from), vars.index(to)); }
  bool has_edge(std::string_view from, std::string_view to) const {
    return adj.has_edge(vars.index(from), vars.index(to));
  }
  std::vector<std::pair<std::string, std::string>> named_edges() const;

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;
};

/// Graph with directed and undirected edges, e.g. a CPDAG.
class MixedGraph {
 public:
  MixedGraph() = default;
  explicit MixedGraph(VariableSet vars);

  const VariableSet& vars() const noexcept { return vars_; }
  std::size_t size() const noexcept { return vars_.size(); }

  bool has_directed(NodeId from, NodeId to) const { return dir_[from * n() + to] != 0; }
  bool has_undirected(NodeId a, NodeId b) const { return und_[a * n() + b] != 0; }
  bool adjacent(NodeId a, NodeId b) const {
    return has_directed(a, b) || has_directed(b, a) || has_undirected(a, b);
  }

  /// Both throw InvalidArgument if the pair is already connected or a == b.
  void add_directed(NodeId from, NodeId to);
  void add_undirected(NodeId a, NodeId b);
  /// Turns a - b into a -> b.
  void orient(NodeId from, NodeId to);
  void remove(NodeId a, NodeId b);

  std::vector<Edge> directed_edges() const;
  /// Unordered pairs reported as (min, max).
  std::vector<Edge> undirected_edges() const;
  std::vector<NodeId> neighbors(NodeId node) const;
  std::size_t degree(NodeId node) const;

  /// The directed part as an adjacency matrix.
  AdjacencyMatrix directed_part() const;

  friend bool operator==(const MixedGraph&, const MixedGraph&) = default;

 private:
  std::size_t n() const noexcept { return vars_.size(); }

  VariableSet vars_;
  std::vector<std::uint8_t> dir_;
  std::vector<std::uint8_t> und_;
};

MixedGraph to_mixed(const CausalGraph& g);

/// Sequence of variable names; position is rank. Names it leaves out are
/// isolated or undetermined.
class TopologicalOrder {
 public:
  TopologicalOrder() = default;
  explicit TopologicalOrder(std::vector<std::string> sequence);

  std::optional<std::size_t> rank(std::string_view name) const;
  bool contains(std::string_view name) const { return rank(name).has_value(); }
  std::size_t size() const noexcept { return sequence_.size(); }
  bool empty() const noexcept { return sequence_.empty(); }
  const std::vector<std::string>& sequence() const noexcept { return sequence_; }

  friend bool operator==(const TopologicalOrder& a, const TopologicalOrder& b) {
    return a.sequence_ == b.sequence_;
  }

 private:
  std::vector<std::string> sequence_;
  std::map<std::string, std::size_t, std::less<>> rank_;
};

/// Level assignment: 0 for parentless nodes, otherwise the longest directed
/// path length from a level-0 node.
class LevelOrder {
 public:
  LevelOrder() = default;
  explicit LevelOrder(std::map<std::string, int> levels) : levels_(std::move(levels)) {}

  int level(std::string_view name) const;
  const std::map<std::string, int>& levels() const noexcept { return levels_; }
  int max_level() const;
  /// Names grouped by level, ascending; names within a level sorted.
  std::vector<std::vector<std::string>> groups() const;

  friend bool operator==(const LevelOrder&, const LevelOrder&) = default;

 private:
  std::map<std::string, int> levels_;
};

// ---------------------------------------------------------------------------
// Metrics and structural operations.

/// Number of truth edges i -> j that the order places j before i.
/// Throws UnorderedNode if the order misses a node of `truth`.
std::size_t dtop(const TopologicalOrder& order, const CausalGraph& truth);

/// Same count restricted to edges whose endpoints are both ranked; used for
/// partial orders produced by elicitation, where unranked nodes are isolated.
std::size_t dtop_ranked(const TopologicalOrder& order, const CausalGraph& truth);

/// Structural Hamming distance; a reversed edge counts once.
std::size_t shd(const AdjacencyMatrix& estimated, const AdjacencyMatrix& truth);
/// Aligns nodes by name. Throws ShapeMismatch if the name sets differ.
std::size_t shd(const CausalGraph& estimated, const CausalGraph& truth);

std::optional<std::vector<NodeId>> find_cycle(const AdjacencyMatrix& g);

/// Throws CyclicGraph.
AdjacencyMatrix transitive_closure(const AdjacencyMatrix& g);
CausalGraph transitive_closure(const CausalGraph& g);

/// Every simple directed cycle with at most `max_len` nodes, once per rotation,
/// each starting at its smallest node id.
std::vector<std::vector<NodeId>> find_cycles(const AdjacencyMatrix& g, std::size_t max_len = 5);
/// Counts the same cycles without materialising them; stops at `limit`.
std::size_t count_cycles(const AdjacencyMatrix& g, std::size_t max_len = 5,
                         std::size_t limit = static_cast<std::size_t>(-1));

/// Kahn's algorithm, smallest ready index first. Throws CyclicGraph.
std::vector<NodeId> topological_sort(const AdjacencyMatrix& g);
TopologicalOrder topological_order_of(const CausalGraph& g);

/// Throws CyclicGraph.
std::vector<int> node_levels(const AdjacencyMatrix& g);
LevelOrder level_order_of(const CausalGraph& g);

std::set<std::string> isolated_nodes(const MixedGraph& g, const VariableSet& vars);
std::set<std::string> isolated_nodes(const CausalGraph& g);

/// Nodes reachable from `node` by a directed path of length >= 1.
std::vector<bool> descendants(const AdjacencyMatrix& g, NodeId node);
std::vector<bool> ancestors(const AdjacencyMatrix& g, NodeId node);

/// Tarjan SCC. Component ids are numbered in order of each component's
/// smallest node id.
std::vector<std::size_t> strongly_connected_components(const AdjacencyMatrix& g);

/// Removes `name` and links each of its parents to each of its children.
CausalGraph contract_node(const CausalGraph& g, std::string_view name);

std::vector<std::string> names_of(const VariableSet& vars, const std::vector<NodeId>& ids);

}  // namespace corder

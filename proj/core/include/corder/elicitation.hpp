#pragma once

#include <corder/expert.hpp>
#include <corder/graph.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace corder {

/// Votes for one unordered pair (a, b), a before b in variable order.
/// votes[Forward] counts a -> b.
struct EdgeBelief {
  std::string a;
  std::string b;
  std::array<std::size_t, 3> votes{};
  double entropy = 0.0;  // bits
  Choice resolved = Choice::NoEdge;
  std::string resolved_by;  // majority | tiebreak | pairwise

  std::size_t total() const { return votes[0] + votes[1] + votes[2]; }
  friend bool operator==(const EdgeBelief&, const EdgeBelief&) = default;
};

struct ElicitationReport {
  std::string method;    // pairwise | triplet
  std::string strategy;  // prompt strategy of the primary expert
  VariableSet vars;
  /// Resolved answers before pruning; may be cyclic.
  CausalGraph merged;
  CausalGraph final_dag;
  /// Absent when the merged graph was cyclic and no pruning was requested of
  /// this method (pairwise); see pruned_order.
  std::optional<TopologicalOrder> order;
  /// Order of final_dag, always present.
  TopologicalOrder pruned_order;
  std::vector<EdgeBelief> beliefs;
  std::map<std::string, std::size_t> calls;
  std::size_t tuples = 0;
  std::size_t ties = 0;
  std::size_t cycles_before_prune = 0;
  std::set<std::string> isolated;
};

/// Shannon entropy (bits) of the normalised vote vector; 0 for no votes.
double vote_entropy(const std::array<std::size_t, 3>& votes);

/// All C(n, size) tuples in lexicographic order when k is absent. With k,
/// a seeded subsample in which every pair appears at least min(k, n-2)
/// times and whose length is at most k * C(n, 2); returned sorted.
std::vector<std::vector<NodeId>> enumerate_tuples(std::size_t n, std::size_t size,
                                                  std::optional<std::size_t> k = std::nullopt,
                                                  std::uint64_t seed = 0);

/// While cyclic: among edges lying on a cycle, drop those whose entropy is
/// strictly above their mean; if none is, drop the single highest-entropy
/// one (ties: lexicographically larger (src, dst) names).
CausalGraph entropy_prune(const CausalGraph& graph, const std::vector<EdgeBelief>& beliefs);

/// Topological order of an acyclic graph without its isolated nodes.
TopologicalOrder merge_order(const CausalGraph& final_dag);

struct PairwiseOptions {
  std::string strategy = "base";  // base | cot | iterative | one_hop
  std::string context;
};

ElicitationReport pairwise_pipeline(const VariableSet& vars, Expert& expert, const PairwiseOptions& opt = {});

struct TripletOptions {
  std::size_t size = 3;
  std::optional<std::size_t> k;
  std::uint64_t seed = 0;
  std::string context;
};

ElicitationReport triplet_pipeline(const VariableSet& vars, Expert& expert, Expert& tiebreak,
                                   const TripletOptions& opt = {});

/// Tallies one tuple verdict into per-pair votes (index pairs i < j).
/// Throws ExpertError if the verdict names nodes outside the tuple.
void tally_tuple(const VariableSet& vars, const std::vector<NodeId>& tuple, const TupleVerdict& v,
                 std::map<Edge, std::array<std::size_t, 3>>& votes);

}  // namespace corder

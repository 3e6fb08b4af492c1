#pragma once

// Brute-force reference implementations used to derive expected values.
// Deliberately naive: enumerate paths, permutations and pairs directly.

#include <corder/graph.hpp>
#include <corder/random.hpp>

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

using corder::AdjacencyMatrix;
using corder::NodeId;

inline bool reaches(const AdjacencyMatrix& g, NodeId from, NodeId to) {
  std::vector<bool> seen(g.size(), false);
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (NodeId v = 0; v < g.size(); ++v)
      if (g.has_edge(u, v) && !seen[v]) {
        if (v == to) return true;
        seen[v] = true;
        stack.push_back(v);
      }
  }
  return false;
}

inline std::size_t shd(const AdjacencyMatrix& a, const AdjacencyMatrix& b) {
  std::size_t d = 0;
  for (NodeId i = 0; i < a.size(); ++i)
    for (NodeId j = i + 1; j < a.size(); ++j) {
      int sa = a.has_edge(i, j) ? 1 : a.has_edge(j, i) ? 2 : 0;
      int sb = b.has_edge(i, j) ? 1 : b.has_edge(j, i) ? 2 : 0;
      if (sa != sb) ++d;
    }
  return d;
}

/// Edges i->j of `truth` with pos[j] < pos[i].
inline std::size_t dtop(const std::vector<NodeId>& perm, const AdjacencyMatrix& truth) {
  std::vector<std::size_t> pos(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) pos[perm[k]] = k;
  std::size_t d = 0;
  for (auto [i, j] : truth.edges())
    if (pos[j] < pos[i]) ++d;
  return d;
}

inline bool is_topological(const std::vector<NodeId>& perm, const AdjacencyMatrix& g) { return dtop(perm, g) == 0; }

inline std::vector<std::vector<NodeId>> all_topological_orders(const AdjacencyMatrix& g) {
  std::vector<NodeId> p(g.size());
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<NodeId>> out;
  do
    if (is_topological(p, g)) out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

inline std::size_t closure_edges(const AdjacencyMatrix& g) {
  std::size_t c = 0;
  for (NodeId i = 0; i < g.size(); ++i)
    for (NodeId j = 0; j < g.size(); ++j)
      if (i != j && reaches(g, i, j)) ++c;
  return c;
}

/// d-separation by enumerating every simple undirected path and applying the
/// blocking rules node by node.
inline bool d_separated(const AdjacencyMatrix& g, NodeId x, NodeId y, const std::vector<NodeId>& z) {
  const std::size_t n = g.size();
  std::vector<bool> inz(n, false);
  for (auto v : z) inz[v] = true;
  if (inz[x] || inz[y]) return true;
  // node is "active collider" if it or a descendant is in z
  std::vector<bool> collider_ok(n, false);
  for (NodeId v = 0; v < n; ++v) {
    if (inz[v]) collider_ok[v] = true;
    for (NodeId w = 0; w < n; ++w)
      if (inz[w] && reaches(g, v, w)) collider_ok[v] = true;
  }
  std::vector<NodeId> path{x};
  std::vector<bool> on(n, false);
  on[x] = true;
  std::function<bool()> open_path = [&]() -> bool {
    NodeId u = path.back();
    if (u == y) {
      for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        NodeId a = path[k - 1], m = path[k], b = path[k + 1];
        bool collider = g.has_edge(a, m) && g.has_edge(b, m);
        if (collider ? !collider_ok[m] : inz[m]) return false;
      }
      return true;
    }
    for (NodeId v = 0; v < n; ++v) {
      if (on[v] || !g.adjacent(u, v)) continue;
      on[v] = true;
      path.push_back(v);
      bool open = open_path();
      path.pop_back();
      on[v] = false;
      if (open) return true;
    }
    return false;
  };
  return !open_path();
}

/// Backdoor check straight from the definition: no member descends from t,
/// and every path into t (first edge pointing at t) is blocked.
inline bool backdoor(const AdjacencyMatrix& g, NodeId t, NodeId y, const std::vector<NodeId>& z) {
  for (auto v : z)
    if (v == t || v == y || reaches(g, t, v)) return false;
  AdjacencyMatrix cut(g.size());
  for (auto [a, b] : g.edges())
    if (a != t) cut.add_edge(a, b);
  return d_separated(cut, t, y, z);
}

inline AdjacencyMatrix random_dag(std::size_t n, double p, corder::Rng& rng) {
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  AdjacencyMatrix g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) g.add_edge(perm[i], perm[j]);
  return g;
}

inline AdjacencyMatrix random_digraph(std::size_t n, double p, corder::Rng& rng) {
  AdjacencyMatrix g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && !g.has_edge(j, i) && rng.bernoulli(p)) g.add_edge(i, j);
  return g;
}

inline std::vector<std::string> names(std::size_t n, const std::string& prefix = "X") {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

inline corder::CausalGraph named(const AdjacencyMatrix& a) {
  return corder::CausalGraph(corder::VariableSet(names(a.size())), a);
}

}  // namespace oracle

#include <corder/graph.hpp>

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>

namespace corder {

namespace {

std::string join_cycle(const std::vector<std::string>& w) {
  std::string s;
  for (const auto& n : w) s += n + " -> ";
  if (!w.empty()) s += w.front();
  return s;
}

std::vector<std::string> index_names(const std::vector<NodeId>& ids) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back("#" + std::to_string(id));
  return out;
}

[[noreturn]] void throw_cyclic(const AdjacencyMatrix& g, const VariableSet* vars) {
  auto c = find_cycle(g);
  std::vector<NodeId> ids = c ? *c : std::vector<NodeId>{};
  throw CyclicGraph(vars ? names_of(*vars, ids) : index_names(ids));
}

}  // namespace

CyclicGraph::CyclicGraph(std::vector<std::string> witness)
    : Error("graph contains a directed cycle: " + join_cycle(witness)), witness_(std::move(witness)) {}

// --- VariableSet -----------------------------------------------------------

VariableSet::VariableSet(std::vector<std::string> names, std::vector<std::string> descriptions) {
  if (!descriptions.empty() && descriptions.size() != names.size())
    throw InvalidArgument("descriptions must match names one to one");
  descriptions.resize(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) add(std::move(names[i]), std::move(descriptions[i]));
}

std::optional<NodeId> VariableSet::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId VariableSet::index(std::string_view name) const {
  auto id = find(name);
  if (!id) throw UnknownNode("unknown node '" + std::string(name) + "'");
  return *id;
}

NodeId VariableSet::add(std::string name, std::string description) {
  if (name.empty()) throw InvalidArgument("variable names must be non-empty");
  if (index_.count(name)) throw InvalidArgument("duplicate variable '" + name + "'");
  NodeId id = names_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  descriptions_.push_back(std::move(description));
  return id;
}

// --- AdjacencyMatrix -------------------------------------------------------

AdjacencyMatrix::AdjacencyMatrix(std::size_t n, const std::vector<Edge>& edges) : AdjacencyMatrix(n) {
  for (auto [a, b] : edges) add_edge(a, b);
}

void AdjacencyMatrix::add_edge(NodeId from, NodeId to) {
  if (from >= n_ || to >= n_) throw InvalidArgument("edge endpoint out of range");
  if (from == to) throw InvalidArgument("self-loops are not allowed");
  bits_[from * n_ + to] = 1;
}

std::size_t AdjacencyMatrix::edge_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<Edge> AdjacencyMatrix::edges() const {
  std::vector<Edge> out;
  for (NodeId i = 0; i < n_; ++i)
    for (NodeId j = 0; j < n_; ++j)
      if (has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

std::vector<NodeId> AdjacencyMatrix::parents(NodeId node) const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < n_; ++i)
    if (has_edge(i, node)) out.push_back(i);
  return out;
}

std::vector<NodeId> AdjacencyMatrix::children(NodeId node) const {
  std::vector<NodeId> out;
  for (NodeId j = 0; j < n_; ++j)
    if (has_edge(node, j)) out.push_back(j);
  return out;
}

std::size_t AdjacencyMatrix::degree(NodeId node) const {
  std::size_t d = 0;
  for (NodeId k = 0; k < n_; ++k) d += has_edge(node, k) + has_edge(k, node);
  return d;
}

bool AdjacencyMatrix::is_acyclic() const { return !find_cycle(*this).has_value(); }

// --- CausalGraph -----------------------------------------------------------

CausalGraph::CausalGraph(VariableSet v, AdjacencyMatrix a) : vars(std::move(v)), adj(std::move(a)) {
  if (adj.size() != vars.size()) throw ShapeMismatch("adjacency size does not match variable count");
}

std::vector<std::pair<std::string, std::string>> CausalGraph::named_edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto [a, b] : adj.edges()) out.emplace_back(vars.name(a), vars.name(b));
  return out;
}

// --- MixedGraph ------------------------------------------------------------

MixedGraph::MixedGraph(VariableSet vars)
    : vars_(std::move(vars)), dir_(vars_.size() * vars_.size(), 0), und_(vars_.size() * vars_.size(), 0) {}

void MixedGraph::add_directed(NodeId from, NodeId to) {
  if (from >= n() || to >= n() || from == to) throw InvalidArgument("bad directed edge");
  if (adjacent(from, to)) throw InvalidArgument("pair already connected");
  dir_[from * n() + to] = 1;
}

void MixedGraph::add_undirected(NodeId a, NodeId b) {
  if (a >= n() || b >= n() || a == b) throw InvalidArgument("bad undirected edge");
  if (adjacent(a, b)) throw InvalidArgument("pair already connected");
  und_[a * n() + b] = und_[b * n() + a] = 1;
}

void MixedGraph::orient(NodeId from, NodeId to) {
  if (!has_undirected(from, to)) throw InvalidArgument("orient: no undirected edge");
  und_[from * n() + to] = und_[to * n() + from] = 0;
  dir_[from * n() + to] = 1;
}

void MixedGraph::remove(NodeId a, NodeId b) {
  und_[a * n() + b] = und_[b * n() + a] = 0;
  dir_[a * n() + b] = dir_[b * n() + a] = 0;
}

std::vector<Edge> MixedGraph::directed_edges() const {
  std::vector<Edge> out;
  for (NodeId i = 0; i < n(); ++i)
    for (NodeId j = 0; j < n(); ++j)
      if (has_directed(i, j)) out.emplace_back(i, j);
  return out;
}

std::vector<Edge> MixedGraph::undirected_edges() const {
  std::vector<Edge> out;
  for (NodeId i = 0; i < n(); ++i)
    for (NodeId j = i + 1; j < n(); ++j)
      if (has_undirected(i, j)) out.emplace_back(i, j);
  return out;
}

std::vector<NodeId> MixedGraph::neighbors(NodeId node) const {
  std::vector<NodeId> out;
  for (NodeId k = 0; k < n(); ++k)
    if (has_undirected(node, k)) out.push_back(k);
  return out;
}

std::size_t MixedGraph::degree(NodeId node) const {
  std::size_t d = 0;
  for (NodeId k = 0; k < n(); ++k) d += adjacent(node, k);
  return d;
}

AdjacencyMatrix MixedGraph::directed_part() const { return AdjacencyMatrix(n(), directed_edges()); }

MixedGraph to_mixed(const CausalGraph& g) {
  MixedGraph m(g.vars);
  for (auto [a, b] : g.adj.edges()) {
    if (g.adj.has_edge(b, a)) throw InvalidArgument("2-cycle cannot be represented as a mixed graph");
    m.add_directed(a, b);
  }
  return m;
}

// --- orders ----------------------------------------------------------------

TopologicalOrder::TopologicalOrder(std::vector<std::string> sequence) : sequence_(std::move(sequence)) {
  for (std::size_t r = 0; r < sequence_.size(); ++r)
    if (!rank_.emplace(sequence_[r], r).second)
      throw InvalidArgument("order lists '" + sequence_[r] + "' twice");
}

std::optional<std::size_t> TopologicalOrder::rank(std::string_view name) const {
  auto it = rank_.find(name);
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

int LevelOrder::level(std::string_view name) const {
  auto it = levels_.find(std::string(name));
  if (it == levels_.end()) throw UnknownNode("no level for '" + std::string(name) + "'");
  return it->second;
}

int LevelOrder::max_level() const {
  int m = -1;
  for (const auto& [_, l] : levels_) m = std::max(m, l);
  return m;
}

std::vector<std::vector<std::string>> LevelOrder::groups() const {
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(max_level() + 1));
  for (const auto& [name, l] : levels_) out[static_cast<std::size_t>(l)].push_back(name);
  return out;
}

// --- metrics ---------------------------------------------------------------

std::size_t dtop(const TopologicalOrder& order, const CausalGraph& truth) {
  std::vector<std::size_t> rank(truth.size());
  for (NodeId i = 0; i < truth.size(); ++i) {
    auto r = order.rank(truth.vars.name(i));
    if (!r) throw UnorderedNode(truth.vars.name(i));
    rank[i] = *r;
  }
  std::size_t count = 0;
  for (auto [a, b] : truth.adj.edges()) count += rank[b] < rank[a];
  return count;
}

std::size_t dtop_ranked(const TopologicalOrder& order, const CausalGraph& truth) {
  std::size_t count = 0;
  for (auto [a, b] : truth.adj.edges()) {
    auto ra = order.rank(truth.vars.name(a));
    auto rb = order.rank(truth.vars.name(b));
    if (ra && rb && *rb < *ra) ++count;
  }
  return count;
}

std::size_t shd(const AdjacencyMatrix& est, const AdjacencyMatrix& truth) {
  if (est.size() != truth.size()) throw ShapeMismatch("shd: graphs differ in size");
  std::size_t d = 0;
  const auto n = est.size();
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) {
      bool e1 = est.has_edge(i, j), e2 = est.has_edge(j, i);
      bool t1 = truth.has_edge(i, j), t2 = truth.has_edge(j, i);
      if (e1 != t1 || e2 != t2) ++d;
    }
  return d;
}

std::size_t shd(const CausalGraph& est, const CausalGraph& truth) {
  if (est.size() != truth.size()) throw ShapeMismatch("shd: graphs differ in node count");
  AdjacencyMatrix aligned(truth.size());
  for (auto [a, b] : est.adj.edges()) {
    auto ta = truth.vars.find(est.vars.name(a));
    auto tb = truth.vars.find(est.vars.name(b));
    if (!ta || !tb) throw ShapeMismatch("shd: graphs have different node names");
    aligned.add_edge(*ta, *tb);
  }
  for (const auto& name : est.vars.names())
    if (!truth.vars.contains(name)) throw ShapeMismatch("shd: graphs have different node names");
  return shd(aligned, truth.adj);
}

// --- structure -------------------------------------------------------------

std::optional<std::vector<NodeId>> find_cycle(const AdjacencyMatrix& g) {
  const auto n = g.size();
  std::vector<int> color(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<NodeId> stack;
  std::optional<std::vector<NodeId>> found;

  std::function<bool(NodeId)> dfs = [&](NodeId u) {
    color[u] = 1;
    stack.push_back(u);
    for (NodeId v = 0; v < n; ++v) {
      if (!g.has_edge(u, v)) continue;
      if (color[v] == 1) {
        auto it = std::find(stack.begin(), stack.end(), v);
        found = std::vector<NodeId>(it, stack.end());
        return true;
      }
      if (color[v] == 0 && dfs(v)) return true;
    }
    stack.pop_back();
    color[u] = 2;
    return false;
  };
  for (NodeId s = 0; s < n; ++s)
    if (color[s] == 0 && dfs(s)) return found;
  return std::nullopt;
}

std::vector<bool> descendants(const AdjacencyMatrix& g, NodeId node) {
  std::vector<bool> seen(g.size(), false);
  std::vector<NodeId> todo{node};
  while (!todo.empty()) {
    auto u = todo.back();
    todo.pop_back();
    for (NodeId v = 0; v < g.size(); ++v)
      if (g.has_edge(u, v) && !seen[v]) {
        seen[v] = true;
        todo.push_back(v);
      }
  }
  return seen;
}

std::vector<bool> ancestors(const AdjacencyMatrix& g, NodeId node) {
  std::vector<bool> seen(g.size(), false);
  std::vector<NodeId> todo{node};
  while (!todo.empty()) {
    auto u = todo.back();
    todo.pop_back();
    for (NodeId v = 0; v < g.size(); ++v)
      if (g.has_edge(v, u) && !seen[v]) {
        seen[v] = true;
        todo.push_back(v);
      }
  }
  return seen;
}

AdjacencyMatrix transitive_closure(const AdjacencyMatrix& g) {
  if (!g.is_acyclic()) throw_cyclic(g, nullptr);
  AdjacencyMatrix out(g.size());
  for (NodeId i = 0; i < g.size(); ++i) {
    auto de = descendants(g, i);
    for (NodeId j = 0; j < g.size(); ++j)
      if (de[j]) out.add_edge(i, j);
  }
  return out;
}

CausalGraph transitive_closure(const CausalGraph& g) {
  if (!g.adj.is_acyclic()) throw_cyclic(g.adj, &g.vars);
  return CausalGraph(g.vars, transitive_closure(g.adj));
}

namespace {

// Johnson-style bounded enumeration: each cycle is rooted at its smallest id.
template <typename Visit>
void enumerate_cycles(const AdjacencyMatrix& g, std::size_t max_len, Visit&& visit) {
  const auto n = g.size();
  std::vector<NodeId> path;
  std::vector<bool> on_path(n, false);
  bool stop = false;
  std::function<void(NodeId, NodeId)> walk = [&](NodeId root, NodeId u) {
    for (NodeId v = root; v < n && !stop; ++v) {
      if (!g.has_edge(u, v)) continue;
      if (v == root) {
        if (path.size() >= 2) stop = !visit(path);
        continue;
      }
      if (on_path[v] || path.size() >= max_len) continue;
      on_path[v] = true;
      path.push_back(v);
      walk(root, v);
      path.pop_back();
      on_path[v] = false;
    }
  };
  for (NodeId root = 0; root < n && !stop; ++root) {
    path = {root};
    on_path[root] = true;
    walk(root, root);
    on_path[root] = false;
  }
}

}  // namespace

std::vector<std::vector<NodeId>> find_cycles(const AdjacencyMatrix& g, std::size_t max_len) {
  if (max_len < 2) throw InvalidArgument("find_cycles: max_len must be >= 2");
  std::vector<std::vector<NodeId>> out;
  enumerate_cycles(g, max_len, [&](const std::vector<NodeId>& c) {
    out.push_back(c);
    return true;
  });
  return out;
}

std::size_t count_cycles(const AdjacencyMatrix& g, std::size_t max_len, std::size_t limit) {
  if (max_len < 2) throw InvalidArgument("count_cycles: max_len must be >= 2");
  std::size_t count = 0;
  enumerate_cycles(g, max_len, [&](const std::vector<NodeId>&) { return ++count < limit; });
  return count;
}

std::vector<NodeId> topological_sort(const AdjacencyMatrix& g) {
  const auto n = g.size();
  std::vector<std::size_t> indeg(n, 0);
  for (auto [a, b] : g.edges()) ++indeg[b];
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<NodeId> out;
  while (!ready.empty()) {
    auto u = ready.top();
    ready.pop();
    out.push_back(u);
    for (NodeId v = 0; v < n; ++v)
      if (g.has_edge(u, v) && --indeg[v] == 0) ready.push(v);
  }
  if (out.size() != n) throw_cyclic(g, nullptr);
  return out;
}

TopologicalOrder topological_order_of(const CausalGraph& g) {
  if (!g.adj.is_acyclic()) throw_cyclic(g.adj, &g.vars);
  return TopologicalOrder(names_of(g.vars, topological_sort(g.adj)));
}

std::vector<int> node_levels(const AdjacencyMatrix& g) {
  auto order = topological_sort(g);
  std::vector<int> level(g.size(), 0);
  for (auto u : order)
    for (NodeId v = 0; v < g.size(); ++v)
      if (g.has_edge(u, v)) level[v] = std::max(level[v], level[u] + 1);
  return level;
}

LevelOrder level_order_of(const CausalGraph& g) {
  if (!g.adj.is_acyclic()) throw_cyclic(g.adj, &g.vars);
  auto lv = node_levels(g.adj);
  std::map<std::string, int> m;
  for (NodeId i = 0; i < g.size(); ++i) m[g.vars.name(i)] = lv[i];
  return LevelOrder(std::move(m));
}

std::set<std::string> isolated_nodes(const MixedGraph& g, const VariableSet& vars) {
  if (vars.size() != g.size()) throw ShapeMismatch("isolated_nodes: variable set does not match graph");
  std::set<std::string> out;
  for (NodeId i = 0; i < g.size(); ++i)
    if (g.degree(i) == 0) out.insert(vars.name(i));
  return out;
}

std::set<std::string> isolated_nodes(const CausalGraph& g) {
  std::set<std::string> out;
  for (NodeId i = 0; i < g.size(); ++i)
    if (g.adj.degree(i) == 0) out.insert(g.vars.name(i));
  return out;
}

std::vector<std::size_t> strongly_connected_components(const AdjacencyMatrix& g) {
  const auto n = g.size();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeId> stack;
  std::size_t counter = 0;
  std::vector<std::vector<NodeId>> groups;

  std::function<void(NodeId)> strong = [&](NodeId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (NodeId w = 0; w < n; ++w) {
      if (!g.has_edge(v, w)) continue;
      if (index[w] == kUnset) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<NodeId> group;
      NodeId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        group.push_back(w);
      } while (w != v);
      groups.push_back(std::move(group));
    }
  };
  for (NodeId v = 0; v < n; ++v)
    if (index[v] == kUnset) strong(v);

  // renumber by smallest member
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
  });
  for (std::size_t c = 0; c < groups.size(); ++c)
    for (auto v : groups[c]) comp[v] = c;
  return comp;
}

CausalGraph contract_node(const CausalGraph& g, std::string_view name) {
  const NodeId x = g.vars.index(name);
  std::vector<std::string> names;
  std::vector<std::string> descs;
  std::vector<NodeId> remap(g.size(), 0);
  for (NodeId i = 0; i < g.size(); ++i) {
    if (i == x) continue;
    remap[i] = names.size();
    names.push_back(g.vars.name(i));
    descs.push_back(g.vars.description(i));
  }
  CausalGraph out{VariableSet(names, descs)};
  for (auto [a, b] : g.adj.edges())
    if (a != x && b != x) out.adj.add_edge(remap[a], remap[b]);
  for (auto p : g.adj.parents(x))
    for (auto c : g.adj.children(x)) out.adj.add_edge(remap[p], remap[c]);
  return out;
}

std::vector<std::string> names_of(const VariableSet& vars, const std::vector<NodeId>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vars.name(id));
  return out;
}

}  // namespace corder

#include <corder/discovery.hpp>

#include <corder/edge_list.hpp>
#include <corder/error.hpp>

#include "parallel.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

namespace corder {

namespace {

// Directed path from -> to using only directed edges.
bool directed_path(const MixedGraph& g, NodeId from, NodeId to) {
  std::vector<bool> seen(g.size(), false);
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (seen[v]) continue;
    seen[v] = true;
    for (NodeId w = 0; w < g.size(); ++w)
      if (g.has_directed(v, w) && !seen[w]) stack.push_back(w);
  }
  return false;
}

bool try_orient(MixedGraph& g, NodeId from, NodeId to) {
  if (!g.has_undirected(from, to) || directed_path(g, to, from)) return false;
  g.orient(from, to);
  return true;
}

bool for_each_subset(const std::vector<NodeId>& pool, std::size_t k,
                     const std::function<bool(const std::vector<NodeId>&)>& fn) {
  if (k > pool.size()) return false;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::vector<NodeId> subset(k);
  for (;;) {
    for (std::size_t i = 0; i < k; ++i) subset[i] = pool[idx[i]];
    if (fn(subset)) return true;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + i - 1) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

void orient_v_structures(MixedGraph& g, const std::map<Edge, std::vector<NodeId>>* sepsets) {
  const std::size_t n = g.size();
  for (NodeId z = 0; z < n; ++z) {
    for (NodeId x = 0; x < n; ++x) {
      for (NodeId y = x + 1; y < n; ++y) {
        if (x == z || y == z || !g.adjacent(x, z) || !g.adjacent(y, z) || g.adjacent(x, y)) continue;
        if (sepsets) {
          auto it = sepsets->find({x, y});
          if (it != sepsets->end() && std::find(it->second.begin(), it->second.end(), z) != it->second.end()) continue;
        }
        try_orient(g, x, z);
        try_orient(g, y, z);
      }
    }
  }
}

bool meek_step(MixedGraph& g) {
  const std::size_t n = g.size();
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = 0; b < n; ++b) {
      if (a == b || !g.has_undirected(a, b)) continue;
      bool fire = false;
      for (NodeId c = 0; c < n && !fire; ++c) {
        if (c == a || c == b) continue;
        // R1: c -> a - b, c and b not adjacent
        if (g.has_directed(c, a) && !g.adjacent(c, b)) fire = true;
        // R2: a -> c -> b
        if (g.has_directed(a, c) && g.has_directed(c, b)) fire = true;
        for (NodeId d = 0; d < n && !fire; ++d) {
          if (d == a || d == b || d == c) continue;
          // R3: a - c -> b, a - d -> b, c and d not adjacent
          if (g.has_undirected(a, c) && g.has_undirected(a, d) && g.has_directed(c, b) && g.has_directed(d, b) &&
              !g.adjacent(c, d))
            fire = true;
          // R4: a ~ c -> d -> b, a - d, c and b not adjacent
          if (g.adjacent(a, c) && g.has_directed(c, d) && g.has_directed(d, b) && g.has_undirected(a, d) &&
              !g.adjacent(c, b))
            fire = true;
        }
      }
      if (fire && try_orient(g, a, b)) return true;
    }
  }
  return false;
}

}  // namespace

void meek_closure(MixedGraph& g) {
  while (meek_step(g)) {
  }
}

MixedGraph pc_cpdag(const CiTest& test, int max_cond_size) {
  const auto& vars = test.vars();
  const std::size_t n = vars.size();
  std::vector<bool> adj(n * n, false);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = 0; b < n; ++b) adj[a * n + b] = a != b;
  std::map<Edge, std::vector<NodeId>> sepsets;
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());

  for (std::size_t level = 0;; ++level) {
    if (max_cond_size >= 0 && level > static_cast<std::size_t>(max_cond_size)) break;
    // adjacency frozen for the whole level
    std::vector<std::vector<NodeId>> frozen(n);
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = 0; b < n; ++b)
        if (adj[a * n + b]) frozen[a].push_back(b);
    std::vector<Edge> todo;
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (adj[a * n + b] && (frozen[a].size() > level || frozen[b].size() > level)) todo.push_back({a, b});
    if (todo.empty()) break;

    std::vector<std::optional<std::vector<NodeId>>> found(todo.size());
    detail::parallel_for(todo.size(), workers, [&](std::size_t i) {
      auto [x, y] = todo[i];
      for (auto [from, other] : {std::pair{x, y}, std::pair{y, x}}) {
        std::vector<NodeId> pool;
        for (auto v : frozen[from])
          if (v != other) pool.push_back(v);
        bool hit = for_each_subset(pool, level, [&](const std::vector<NodeId>& s) {
          if (!test.independent(x, y, s)) return false;
          found[i] = s;
          return true;
        });
        if (hit) return;
      }
    });
    for (std::size_t i = 0; i < todo.size(); ++i) {
      if (!found[i]) continue;
      auto [x, y] = todo[i];
      adj[x * n + y] = adj[y * n + x] = false;
      sepsets[{x, y}] = *found[i];
    }
  }

  MixedGraph g(vars);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (adj[a * n + b]) g.add_undirected(a, b);
  orient_v_structures(g, &sepsets);
  meek_closure(g);
  return g;
}

MixedGraph pc_cpdag(const SampleTable& data, const CiTestConfig& cfg) {
  auto test = make_ci_test(data, cfg);
  return pc_cpdag(*test, cfg.max_cond_size);
}

MixedGraph cpdag_of(const CausalGraph& dag) {
  const std::size_t n = dag.size();
  MixedGraph g(dag.vars);
  for (auto [a, b] : dag.adj.edges()) {
    if (!g.adjacent(a, b)) g.add_undirected(std::min(a, b), std::max(a, b));
  }
  for (NodeId z = 0; z < n; ++z) {
    auto pa = dag.adj.parents(z);
    for (std::size_t i = 0; i < pa.size(); ++i)
      for (std::size_t j = i + 1; j < pa.size(); ++j) {
        if (dag.adj.adjacent(pa[i], pa[j])) continue;
        if (g.has_undirected(pa[i], z)) g.orient(pa[i], z);
        if (g.has_undirected(pa[j], z)) g.orient(pa[j], z);
      }
  }
  meek_closure(g);
  return g;
}

OrientResult orient_with_order(const MixedGraph& cpdag, const TopologicalOrder& order, Expert* fallback,
                               const std::string& context) {
  const auto& vars = cpdag.vars();
  OrientResult out;
  out.graph = CausalGraph(vars);
  for (auto [a, b] : cpdag.directed_edges()) out.graph.adj.add_edge(a, b);
  for (auto [a, b] : cpdag.undirected_edges()) {
    auto ra = order.rank(vars.name(a)), rb = order.rank(vars.name(b));
    if (ra && rb) {
      if (*ra < *rb) out.graph.adj.add_edge(a, b);
      else out.graph.adj.add_edge(b, a);
      continue;
    }
    if (!fallback)
      throw InvalidArgument("'" + vars.name(ra ? b : a) + "' is not ranked and no fallback expert was given");
    auto v = fallback->ask_pair(make_pair_query(vars, a, b, context));
    ++out.fallback_calls;
    if (v.choice == Choice::Forward) out.graph.adj.add_edge(a, b);
    else if (v.choice == Choice::Backward) out.graph.adj.add_edge(b, a);
    else out.dropped.emplace_back(vars.name(a), vars.name(b));
  }
  if (auto cyc = find_cycle(out.graph.adj)) out.cycle = names_of(vars, *cyc);
  return out;
}

LevelPrior export_level_prior(const CausalGraph& graph, double prob) {
  if (!(prob > 0.0 && prob <= 1.0)) throw InvalidArgument("prior probability must lie in (0, 1]");
  const std::size_t n = graph.size();
  auto comp = strongly_connected_components(graph.adj);
  std::size_t k = 0;
  for (auto c : comp) k = std::max(k, c + 1);
  AdjacencyMatrix cond(k);
  for (auto [a, b] : graph.adj.edges())
    if (comp[a] != comp[b] && !cond.has_edge(comp[a], comp[b])) cond.add_edge(comp[a], comp[b]);
  auto lv = node_levels(cond);
  std::map<std::string, int> levels;
  for (NodeId v = 0; v < n; ++v) levels[graph.vars.name(v)] = lv[comp[v]];
  return {LevelOrder(std::move(levels)), prob};
}

std::string write_level_prior(const LevelPrior& prior) {
  std::ostringstream os;
  os << "prob " << prior.prob << '\n';
  auto groups = prior.levels.groups();
  for (std::size_t l = 0; l < groups.size(); ++l) {
    if (groups[l].empty()) continue;
    os << "level " << l << ':';
    for (const auto& name : groups[l]) os << ' ' << quote_name(name);
    os << '\n';
  }
  return os.str();
}

LevelPrior parse_level_prior(std::string_view text) {
  LevelPrior out;
  std::map<std::string, int> levels;
  bool have_prob = false;
  std::size_t lineno = 0, pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::string s(line);
    try {
      if (s.rfind("prob ", 0) == 0) {
        out.prob = std::stod(s.substr(5));
        have_prob = true;
      } else if (s.rfind("level ", 0) == 0) {
        auto colon = s.find(':');
        if (colon == std::string::npos) throw ParseError("missing ':'", lineno);
        int l = std::stoi(s.substr(6, colon - 6));
        for (auto& name : split_names(s.substr(colon + 1))) levels[name] = l;
      } else {
        throw ParseError("expected 'prob' or 'level'", lineno);
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad number", lineno);
    }
  }
  if (!have_prob) throw ParseError("missing prob line");
  out.levels = LevelOrder(std::move(levels));
  return out;
}

}  // namespace corder

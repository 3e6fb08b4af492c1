#include <corder/elicitation.hpp>

#include <corder/error.hpp>
#include <corder/random.hpp>

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace corder {

namespace {

Edge ordered(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Advances `c` (ascending, values < n) to the next k-combination.
bool next_combination(std::vector<NodeId>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::vector<NodeId>> all_combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<NodeId>> out;
  if (k > n) return out;
  std::vector<NodeId> c(k);
  std::iota(c.begin(), c.end(), NodeId{0});
  do out.push_back(c);
  while (next_combination(c, n));
  return out;
}

void apply_choice(CausalGraph& g, NodeId a, NodeId b, Choice c) {
  if (c == Choice::Forward) g.adj.add_edge(a, b);
  else if (c == Choice::Backward) g.adj.add_edge(b, a);
}

void finish(ElicitationReport& r, bool keep_cyclic_order) {
  r.cycles_before_prune = count_cycles(r.merged.adj);
  r.final_dag = entropy_prune(r.merged, r.beliefs);
  r.pruned_order = merge_order(r.final_dag);
  r.isolated = isolated_nodes(r.final_dag);
  if (keep_cyclic_order || r.merged.adj.is_acyclic()) r.order = r.pruned_order;
}

}  // namespace

double vote_entropy(const std::array<std::size_t, 3>& votes) {
  const double total = static_cast<double>(votes[0] + votes[1] + votes[2]);
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto v : votes) {
    if (v == 0) continue;
    double p = v / total;
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<std::vector<NodeId>> enumerate_tuples(std::size_t n, std::size_t size, std::optional<std::size_t> k,
                                                  std::uint64_t seed) {
  if (size < 2) throw InvalidArgument("tuple size must be at least 2");
  if (n < size) throw InvalidArgument("need at least " + std::to_string(size) + " variables");
  if (!k) return all_combinations(n, size);
  if (*k == 0) throw InvalidArgument("k must be positive");

  const std::size_t need = std::min(*k, n - 2);
  Rng rng(mix_seed(seed, 0x7475706cULL));
  std::vector<std::size_t> cover(n * n, 0);
  auto covered = [&](NodeId a, NodeId b) -> std::size_t& {
    auto e = ordered(a, b);
    return cover[e.first * n + e.second];
  };

  std::vector<Edge> pairs;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) pairs.push_back({a, b});
  for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[rng.below(i)]);

  std::set<std::vector<NodeId>> chosen;
  const auto extras = all_combinations(n - 2, size - 2);
  for (auto [a, b] : pairs) {
    while (covered(a, b) < need) {
      std::vector<NodeId> best;
      std::size_t best_score = 0;
      std::uint64_t best_key = 0;
      for (const auto& ex : extras) {
        std::vector<NodeId> t{a, b};
        for (auto x : ex) {
          // map 0..n-3 onto the nodes other than a and b
          NodeId v = x;
          for (NodeId skip : {std::min(a, b), std::max(a, b)})
            if (v >= skip) ++v;
          t.push_back(v);
        }
        std::sort(t.begin(), t.end());
        if (chosen.contains(t)) continue;
        std::size_t score = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
          for (std::size_t j = i + 1; j < t.size(); ++j)
            if (covered(t[i], t[j]) < need) ++score;
        std::uint64_t key = rng.next();
        if (best.empty() || score > best_score || (score == best_score && key < best_key)) {
          best = std::move(t);
          best_score = score;
          best_key = key;
        }
      }
      if (best.empty()) break;
      for (std::size_t i = 0; i < best.size(); ++i)
        for (std::size_t j = i + 1; j < best.size(); ++j) ++covered(best[i], best[j]);
      chosen.insert(std::move(best));
    }
  }
  return {chosen.begin(), chosen.end()};
}

CausalGraph entropy_prune(const CausalGraph& graph, const std::vector<EdgeBelief>& beliefs) {
  std::map<Edge, double> entropy;
  for (const auto& b : beliefs) {
    auto ia = graph.vars.find(b.a), ib = graph.vars.find(b.b);
    if (ia && ib) entropy[ordered(*ia, *ib)] = b.entropy;
  }
  auto h = [&](Edge e) {
    auto it = entropy.find(ordered(e.first, e.second));
    return it == entropy.end() ? 0.0 : it->second;
  };

  CausalGraph g = graph;
  while (!g.adj.is_acyclic()) {
    auto scc = strongly_connected_components(g.adj);
    std::vector<Edge> on_cycle;
    for (auto e : g.adj.edges())
      if (scc[e.first] == scc[e.second]) on_cycle.push_back(e);
    double mean = 0.0;
    for (auto e : on_cycle) mean += h(e);
    mean /= static_cast<double>(on_cycle.size());

    std::vector<Edge> drop;
    for (auto e : on_cycle)
      if (h(e) > mean + 1e-12) drop.push_back(e);
    if (drop.empty()) {
      Edge worst = on_cycle.front();
      auto key = [&](Edge e) { return std::make_pair(g.vars.name(e.first), g.vars.name(e.second)); };
      for (auto e : on_cycle) {
        if (h(e) > h(worst) + 1e-12 || (std::abs(h(e) - h(worst)) <= 1e-12 && key(e) > key(worst))) worst = e;
      }
      drop.push_back(worst);
    }
    for (auto e : drop) g.adj.remove_edge(e.first, e.second);
  }
  return g;
}

TopologicalOrder merge_order(const CausalGraph& final_dag) {
  auto iso = isolated_nodes(final_dag);
  std::vector<std::string> seq;
  for (auto id : topological_sort(final_dag.adj)) {
    const auto& name = final_dag.vars.name(id);
    if (!iso.contains(name)) seq.push_back(name);
  }
  return TopologicalOrder(std::move(seq));
}

void tally_tuple(const VariableSet& vars, const std::vector<NodeId>& tuple, const TupleVerdict& v,
                 std::map<Edge, std::array<std::size_t, 3>>& votes) {
  std::set<Edge> edges;
  for (const auto& [from, to] : v.edges) {
    auto a = vars.find(from), b = vars.find(to);
    if (!a || !b || std::find(tuple.begin(), tuple.end(), *a) == tuple.end() ||
        std::find(tuple.begin(), tuple.end(), *b) == tuple.end())
      throw ExpertError("answer mentions '" + from + "' -> '" + to + "' outside the queried nodes");
    if (*a == *b) throw ExpertError("answer contains a self-loop on '" + from + "'");
    edges.insert({*a, *b});
  }
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    for (std::size_t j = i + 1; j < tuple.size(); ++j) {
      auto [a, b] = ordered(tuple[i], tuple[j]);
      bool fwd = edges.contains({a, b}), bwd = edges.contains({b, a});
      if (fwd && bwd)
        throw ExpertError("answer orients '" + vars.name(a) + "' and '" + vars.name(b) + "' both ways");
      auto c = fwd ? Choice::Forward : bwd ? Choice::Backward : Choice::NoEdge;
      ++votes[{a, b}][static_cast<std::size_t>(c)];
    }
  }
}

ElicitationReport pairwise_pipeline(const VariableSet& vars, Expert& expert, const PairwiseOptions& opt) {
  static const std::set<std::string> strategies{"base", "cot", "iterative", "one_hop"};
  if (!strategies.contains(opt.strategy)) throw InvalidArgument("unknown pairwise strategy '" + opt.strategy + "'");
  if (vars.size() < 2) throw InvalidArgument("need at least 2 variables");

  ElicitationReport r;
  r.method = "pairwise";
  r.strategy = opt.strategy;
  r.vars = vars;
  r.merged = CausalGraph(vars);
  const std::size_t before = expert.calls();

  std::vector<Edge> pairs;
  for (NodeId a = 0; a < vars.size(); ++a)
    for (NodeId b = a + 1; b < vars.size(); ++b) pairs.push_back({a, b});
  std::vector<Choice> answers(pairs.size(), Choice::NoEdge);

  auto query = [&](std::size_t i) {
    auto q = make_pair_query(vars, pairs[i].first, pairs[i].second, opt.context);
    q.strategy = opt.strategy;
    return q;
  };

  const bool sequential = opt.strategy == "iterative" || opt.strategy == "one_hop";
  if (sequential) {
    std::vector<NamedEdge> known;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      auto q = query(i);
      q.known_edges = known;
      answers[i] = expert.ask_pair(q).choice;
      auto [a, b] = pairs[i];
      if (answers[i] == Choice::Forward) known.emplace_back(vars.name(a), vars.name(b));
      else if (answers[i] == Choice::Backward) known.emplace_back(vars.name(b), vars.name(a));
    }
  } else {
    detail::parallel_for(pairs.size(), expert.max_in_flight(),
                         [&](std::size_t i) { answers[i] = expert.ask_pair(query(i)).choice; });
  }

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [a, b] = pairs[i];
    EdgeBelief bel;
    bel.a = vars.name(a);
    bel.b = vars.name(b);
    ++bel.votes[static_cast<std::size_t>(answers[i])];
    bel.resolved = answers[i];
    bel.resolved_by = "pairwise";
    r.beliefs.push_back(std::move(bel));
    apply_choice(r.merged, a, b, answers[i]);
  }
  r.calls["primary"] = expert.calls() - before;
  finish(r, false);
  return r;
}

ElicitationReport triplet_pipeline(const VariableSet& vars, Expert& expert, Expert& tiebreak,
                                   const TripletOptions& opt) {
  if (opt.size != 3 && opt.size != 4) throw InvalidArgument("tuple size must be 3 or 4");
  auto tuples = enumerate_tuples(vars.size(), opt.size, opt.k, opt.seed);

  ElicitationReport r;
  r.method = opt.size == 3 ? "triplet" : "quadruplet";
  r.strategy = "triplet";
  r.vars = vars;
  r.merged = CausalGraph(vars);
  r.tuples = tuples.size();
  const std::size_t before = expert.calls();
  const std::size_t tb_before = tiebreak.calls();

  std::vector<TupleVerdict> verdicts(tuples.size());
  detail::parallel_for(tuples.size(), expert.max_in_flight(), [&](std::size_t i) {
    verdicts[i] = expert.ask_tuple(make_tuple_query(vars, tuples[i], opt.context));
  });

  std::map<Edge, std::array<std::size_t, 3>> votes;
  for (std::size_t i = 0; i < tuples.size(); ++i) tally_tuple(vars, tuples[i], verdicts[i], votes);

  for (const auto& [pair, v] : votes) {
    auto [a, b] = pair;
    EdgeBelief bel;
    bel.a = vars.name(a);
    bel.b = vars.name(b);
    bel.votes = v;
    bel.entropy = vote_entropy(v);
    auto top = *std::max_element(v.begin(), v.end());
    if (std::count(v.begin(), v.end(), top) == 1) {
      bel.resolved = static_cast<Choice>(std::max_element(v.begin(), v.end()) - v.begin());
      bel.resolved_by = "majority";
    } else {
      auto q = make_pair_query(vars, a, b, opt.context);
      bel.resolved = tiebreak.ask_pair(q).choice;
      bel.resolved_by = "tiebreak";
      ++r.ties;
    }
    apply_choice(r.merged, a, b, bel.resolved);
    r.beliefs.push_back(std::move(bel));
  }
  r.calls["primary"] = expert.calls() - before;
  r.calls["tiebreak"] = tiebreak.calls() - tb_before;
  finish(r, true);
  return r;
}

}  // namespace corder

#include <corder/sims.hpp>

#include <corder/bayes_net.hpp>
#include <corder/bundled.hpp>
#include <corder/effect.hpp>
#include <corder/elicitation.hpp>
#include <corder/error.hpp>
#include <corder/expert.hpp>

#include "json_io.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace corder {

using detail::json;

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("X" + std::to_string(i));
  return out;
}

// Kahn with smallest-index tie-break, over parent bitmasks.
bool canonical_order_is(const std::vector<std::uint32_t>& par, const std::vector<NodeId>& sigma) {
  const std::size_t n = sigma.size();
  std::uint32_t placed = 0;
  for (std::size_t k = 0; k < n; ++k) {
    NodeId pick = n;
    for (NodeId v = 0; v < n; ++v) {
      if ((placed >> v) & 1u) continue;
      if ((par[v] & ~placed) == 0) {
        pick = v;
        break;
      }
    }
    if (pick != sigma[k]) return false;
    placed |= 1u << pick;
  }
  return true;
}

bool forward_in(const AdjacencyMatrix& g, const std::vector<NodeId>& sigma) {
  std::vector<std::size_t> pos(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) pos[sigma[i]] = i;
  for (auto [a, b] : g.edges())
    if (pos[a] > pos[b]) return false;
  return true;
}

std::uint64_t encode(const AdjacencyMatrix& g, const std::vector<NodeId>& perm) {
  const std::size_t n = g.size();
  std::uint64_t code = 0;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = 0; b < n; ++b)
      if (g.has_edge(a, b)) code |= std::uint64_t{1} << (perm[a] * n + perm[b]);
  return code;
}

std::array<double, 3> choice_weights(Choice correct, ChoiceSet forbidden, double eps) {
  std::array<double, 3> w{};
  const bool correct_allowed = !(forbidden & choice_bit(correct));
  double total = 0;
  for (int k = 0; k < 3; ++k) {
    auto c = static_cast<Choice>(k);
    if (forbidden & choice_bit(c)) w[k] = 0;
    else if (c == correct) w[k] = 1 - eps;
    else w[k] = correct_allowed ? eps / 2 : 0.5;
    total += w[k];
  }
  for (auto& x : w) x /= total;
  return w;
}

}  // namespace

Stats describe(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman: length mismatch");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  auto mx = describe(rx).mean, my = describe(ry).mean;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

const std::vector<double>& SimReport::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("no column '" + name + "'");
  return records[static_cast<std::size_t>(it - columns.begin())];
}

double SimReport::value(const std::string& key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  throw InvalidArgument("no summary value '" + key + "'");
}

void SimReport::add_column_stats(const std::string& name) {
  auto s = describe(column(name));
  summary.emplace_back(name + "_mean", s.mean);
  summary.emplace_back(name + "_std", s.std);
  summary.emplace_back(name + "_min", s.min);
  summary.emplace_back(name + "_max", s.max);
}

std::string SimReport::to_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["parameters"] = json::object();
  for (const auto& [k, v] : parameters) j["parameters"][k] = v;
  j["columns"] = columns;
  j["n_records"] = n_records();
  j["summary"] = json::object();
  for (const auto& [k, v] : summary) j["summary"][k] = std::isfinite(v) ? json(v) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string SimReport::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += '\n';
  for (std::size_t r = 0; r < n_records(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += fmt(records[c][r]);
    }
    out += '\n';
  }
  return out;
}

std::size_t closure_shd(const AdjacencyMatrix& g) {
  std::size_t total = 0;
  for (NodeId v = 0; v < g.size(); ++v) {
    auto de = descendants(g, v);
    total += static_cast<std::size_t>(std::count(de.begin(), de.end(), true)) - g.children(v).size();
  }
  return total;
}

CausalGraph random_dag(std::size_t n, double p, Rng& rng) {
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  CausalGraph g(VariableSet(default_names(n)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) g.adj.add_edge(perm[i], perm[j]);
  return g;
}

std::vector<AdjacencyMatrix> dag_classes(std::size_t n) {
  if (n == 0 || n > 6) throw InvalidArgument("dag_classes supports 1 to 6 nodes");
  std::vector<Edge> pairs;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) pairs.push_back({a, b});
  std::vector<std::vector<NodeId>> perms;
  std::vector<NodeId> p(n);
  std::iota(p.begin(), p.end(), NodeId{0});
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));

  std::unordered_map<std::uint64_t, bool> seen;
  std::vector<AdjacencyMatrix> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
    AdjacencyMatrix g(n);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if ((mask >> i) & 1u) g.add_edge(pairs[i].first, pairs[i].second);
    std::uint64_t best = ~std::uint64_t{0};
    for (const auto& q : perms) best = std::min(best, encode(g, q));
    if (seen.emplace(best, true).second) out.push_back(std::move(g));
  }
  return out;
}

SimReport sim_perfect_expert(const CausalGraph& graph) {
  if (!graph.adj.is_acyclic()) throw CyclicGraph(names_of(graph.vars, *find_cycle(graph.adj)));
  PerfectExpert expert(graph);
  auto r = pairwise_pipeline(graph.vars, expert);
  const auto order = r.order ? *r.order : r.pruned_order;
  const auto d = dtop_ranked(order, graph);
  const auto s = shd(r.final_dag.adj, graph.adj);
  const auto expect = closure_shd(graph.adj);

  SimReport rep;
  rep.name = "perfect";
  rep.parameters = {{"nodes", std::to_string(graph.size())}, {"edges", std::to_string(graph.adj.edge_count())}};
  rep.columns = {"dtop", "shd", "closure_shd", "calls"};
  rep.records = {{double(d)}, {double(s)}, {double(expect)}, {double(r.calls.at("primary"))}};
  rep.summary = {{"dtop", double(d)}, {"shd", double(s)}, {"closure_shd", double(expect)},
                 {"calls", double(r.calls.at("primary"))}};
  if (!r.order) throw AssertionFailure("perfect expert produced a cyclic graph");
  if (d != 0) throw AssertionFailure("perfect expert: D_top = " + std::to_string(d));
  if (s != expect)
    throw AssertionFailure("perfect expert: SHD " + std::to_string(s) + " != " + std::to_string(expect));
  return rep;
}

SimReport sim_shd_variance(std::size_t n, std::uint64_t seed, const ShdVarianceOptions& opt) {
  if (n < 3 || n > 7) throw InvalidArgument("sim_shd_variance needs 3 <= n <= 7");
  SimReport rep;
  rep.name = "shd-variance";
  rep.seed = seed;
  rep.parameters = {{"nodes", std::to_string(n)},
                    {"truths", std::to_string(opt.truths)},
                    {"mode", n <= 6 ? "enumerate" : "sample"}};
  if (n == 7) rep.parameters.emplace_back("samples", std::to_string(opt.samples));
  rep.columns = {"truth", "edges", "family_size", "shd_min", "shd_max", "shd_mean", "closure_shd", "closure_in_family"};
  rep.records.assign(rep.columns.size(), {});

  std::vector<NodeId> ident(n);
  std::iota(ident.begin(), ident.end(), NodeId{0});
  const std::size_t npairs = n * (n - 1) / 2;

  for (std::size_t t = 0; t < opt.truths; ++t) {
    Rng rng(mix_seed(seed, t));
    auto truth = random_dag(n, 0.5, rng);
    auto closure = transitive_closure(truth.adj);
    std::size_t count = 0, lo = ~std::size_t{0}, hi = 0;
    double sum = 0;
    bool closure_seen = false;

    auto visit = [&](const std::vector<NodeId>& sigma, std::uint32_t mask, std::uint32_t tmask,
                     std::uint32_t cmask) {
      auto d = static_cast<std::size_t>(std::popcount(mask ^ tmask));
      ++count;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      sum += static_cast<double>(d);
      if (mask == cmask) closure_seen = true;
      (void)sigma;
    };

    auto pair_masks = [&](const std::vector<NodeId>& sigma, std::uint32_t& tmask, std::uint32_t& cmask) {
      tmask = cmask = 0;
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
          if (truth.adj.has_edge(sigma[i], sigma[j])) tmask |= 1u << k;
          if (closure.has_edge(sigma[i], sigma[j])) cmask |= 1u << k;
        }
    };
    auto parents_of = [&](const std::vector<NodeId>& sigma, std::uint32_t mask) {
      std::vector<std::uint32_t> par(n, 0);
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++k)
          if ((mask >> k) & 1u) par[sigma[j]] |= 1u << sigma[i];
      return par;
    };

    if (n <= 6) {
      auto sigma = ident;
      do {
        if (!forward_in(truth.adj, sigma)) continue;
        std::uint32_t tmask, cmask;
        pair_masks(sigma, tmask, cmask);
        for (std::uint32_t mask = 0; mask < (1u << npairs); ++mask) {
          if (canonical_order_is(parents_of(sigma, mask), sigma)) visit(sigma, mask, tmask, cmask);
        }
      } while (std::next_permutation(sigma.begin(), sigma.end()));
    } else {
      Rng draw(mix_seed(seed, 0x10000 + t));
      for (std::size_t s = 0; s < opt.samples; ++s) {
        // random linear extension of the truth
        std::vector<NodeId> sigma;
        std::uint32_t placed = 0;
        std::vector<std::uint32_t> tpar(n, 0);
        for (auto [a, b] : truth.adj.edges()) tpar[b] |= 1u << a;
        while (sigma.size() < n) {
          std::vector<NodeId> avail;
          for (NodeId v = 0; v < n; ++v)
            if (!((placed >> v) & 1u) && (tpar[v] & ~placed) == 0) avail.push_back(v);
          auto v = avail[draw.below(avail.size())];
          sigma.push_back(v);
          placed |= 1u << v;
        }
        auto mask = static_cast<std::uint32_t>(draw.next() & ((1u << npairs) - 1));
        auto par = parents_of(sigma, mask);
        // accept when the candidate's own order is a linear extension
        std::vector<NodeId> own;
        std::uint32_t done = 0;
        for (std::size_t k = 0; k < n; ++k)
          for (NodeId v = 0; v < n; ++v)
            if (!((done >> v) & 1u) && (par[v] & ~done) == 0) {
              own.push_back(v);
              done |= 1u << v;
              break;
            }
        if (!forward_in(truth.adj, own)) continue;
        // re-express in the accepted order's pair coordinates
        std::uint32_t tmask, cmask, m2 = 0;
        pair_masks(own, tmask, cmask);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j, ++k)
            if ((par[own[j]] >> own[i]) & 1u) m2 |= 1u << k;
        visit(own, m2, tmask, cmask);
      }
    }

    rep.records[0].push_back(double(t));
    rep.records[1].push_back(double(truth.adj.edge_count()));
    rep.records[2].push_back(double(count));
    rep.records[3].push_back(count ? double(lo) : 0.0);
    rep.records[4].push_back(double(hi));
    rep.records[5].push_back(count ? sum / double(count) : 0.0);
    rep.records[6].push_back(double(closure_shd(truth.adj)));
    rep.records[7].push_back(closure_seen ? 1.0 : 0.0);
  }
  rep.summary.emplace_back("max_shd", describe(rep.column("shd_max")).max);
  rep.summary.emplace_back("min_shd", describe(rep.column("shd_min")).min);
  const auto& mins = rep.column("shd_min");
  const auto& maxs = rep.column("shd_max");
  double hits14 = 0;
  for (std::size_t i = 0; i < mins.size(); ++i)
    if (mins[i] == 0 && maxs[i] == 14) ++hits14;
  rep.summary.emplace_back("truths_with_range_0_14", hits14);
  rep.add_column_stats("shd_max");
  rep.add_column_stats("family_size");
  return rep;
}

double prop4_closed_form(double e) { return e * (3 * e * e - 30 * e + 52) / (4 - 2 * e) / 25.0; }

std::vector<AdjacencyMatrix> three_node_dags() {
  std::vector<AdjacencyMatrix> out;
  const Edge pairs[3] = {{0, 1}, {0, 2}, {1, 2}};
  // each pair: none, forward, backward
  for (int code = 0; code < 27; ++code) {
    AdjacencyMatrix g(3);
    int c = code;
    for (auto [a, b] : pairs) {
      int s = c % 3;
      c /= 3;
      if (s == 1) g.add_edge(a, b);
      if (s == 2) g.add_edge(b, a);
    }
    if (g.is_acyclic()) out.push_back(std::move(g));
  }
  return out;
}

double prop4_exact(double eps) {
  const auto dags = three_node_dags();
  const auto seq = tuple_pair_sequence(3);
  double total = 0;
  for (const auto& truth : dags) {
    const NodeId nodes[3] = {0, 1, 2};
    std::function<double(std::size_t, AdjacencyMatrix&)> walk = [&](std::size_t step, AdjacencyMatrix& local) {
      auto [p, q] = seq[step];
      std::vector<NodeId> aux;
      for (NodeId r = 0; r < 3; ++r)
        if (r != p && r != q) aux.push_back(nodes[r]);
      auto correct = perfect_pairwise(truth, p, q, aux);
      ChoiceSet forbidden = 0;
      if (path_avoiding(local, q, p, {})) forbidden |= choice_bit(Choice::Forward);
      if (path_avoiding(local, p, q, {})) forbidden |= choice_bit(Choice::Backward);
      auto w = choice_weights(correct, forbidden, eps);
      double err = 0;
      for (int k = 0; k < 3; ++k) {
        if (w[k] == 0) continue;
        auto c = static_cast<Choice>(k);
        if (step + 1 == seq.size()) {
          if (c != correct) err += w[k];
          continue;
        }
        auto next = local;
        if (c == Choice::Forward) next.add_edge(p, q);
        if (c == Choice::Backward) next.add_edge(q, p);
        err += w[k] * walk(step + 1, next);
      }
      return err;
    };
    AdjacencyMatrix empty(3);
    total += walk(0, empty);
  }
  return total / static_cast<double>(dags.size());
}

SimReport sim_prop4(double epsilon, std::size_t trials, std::uint64_t seed, std::size_t workers, bool keep_records) {
  if (!(epsilon > 0 && epsilon < 1)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (trials == 0) throw InvalidArgument("trials must be positive");
  const auto dags = three_node_dags();
  const std::vector<NodeId> nodes{0, 1, 2};

  std::vector<double> graph_col, err_col;
  if (keep_records) {
    graph_col.assign(trials, 0);
    err_col.assign(trials, 0);
  }
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, trials)) * 8;
  std::vector<std::size_t> errors(chunks, 0);
  detail::parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t begin = trials * c / chunks, end = trials * (c + 1) / chunks;
    for (std::size_t t = begin; t < end; ++t) {
      Rng rng(mix_seed(seed, t));
      auto gi = rng.below(dags.size());
      const auto& truth = dags[gi];
      auto edges = epsilon_tuple_edges(truth, nodes, epsilon, rng);
      Choice got = Choice::NoEdge;
      for (auto [a, b] : edges) {
        if (a == 0 && b == 1) got = Choice::Forward;
        if (a == 1 && b == 0) got = Choice::Backward;
      }
      bool wrong = got != perfect_pairwise(truth, 0, 1, {2});
      errors[c] += wrong;
      if (keep_records) {
        graph_col[t] = double(gi);
        err_col[t] = wrong ? 1.0 : 0.0;
      }
    }
  });

  const double n = static_cast<double>(trials);
  const double wrong = static_cast<double>(std::accumulate(errors.begin(), errors.end(), std::size_t{0}));
  const double emp = wrong / n, closed = prop4_closed_form(epsilon), exact = prop4_exact(epsilon);
  const double sigma = std::sqrt(closed * (1 - closed) / n);
  const double sigma_exact = std::sqrt(exact * (1 - exact) / n);

  SimReport rep;
  rep.name = "prop4";
  rep.seed = seed;
  rep.parameters = {{"epsilon", fmt(epsilon)}, {"trials", std::to_string(trials)}};
  rep.columns = {"graph", "error"};
  rep.records = {std::move(graph_col), std::move(err_col)};
  if (!keep_records) rep.records.clear();
  rep.summary = {{"errors", wrong},
                 {"empirical", emp},
                 {"closed_form", closed},
                 {"exact", exact},
                 {"abs_diff_closed_form", std::abs(emp - closed)},
                 {"sigma", sigma},
                 {"z_closed_form", (emp - closed) / sigma},
                 {"sigma_exact", sigma_exact},
                 {"z_exact", (emp - exact) / sigma_exact},
                 {"below_epsilon", emp < epsilon ? 1.0 : 0.0}};
  return rep;
}

SimReport sim_metric_correlation(const std::vector<std::string>& graphs, const std::vector<std::uint64_t>& seeds,
                                 const MetricCorrelationOptions& opt) {
  SimReport rep;
  rep.name = "metric-correlation";
  rep.seed = seeds.empty() ? 0 : seeds.front();
  std::string gl, sl;
  for (const auto& g : graphs) gl += (gl.empty() ? "" : " ") + g;
  for (auto s : seeds) sl += (sl.empty() ? "" : " ") + std::to_string(s);
  rep.parameters = {{"graphs", gl},
                    {"seeds", sl},
                    {"orders_per_seed", std::to_string(opt.orders_per_seed)},
                    {"samples", std::to_string(opt.samples)},
                    {"extra_edge_prob", fmt(opt.extra_edge_prob)}};
  rep.columns = {"graph", "seed", "order", "dtop", "shd", "eps_ace"};
  rep.records.assign(rep.columns.size(), {});

  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto truth = bundled_graph(graphs[gi]);
    const std::size_t n = truth.size();
    for (auto seed : seeds) {
      auto scm = random_linear_scm(truth, seed);
      auto data = sample_linear_scm(scm, opt.samples, mix_seed(seed, 1));
      std::vector<std::vector<double>> effect(n, std::vector<double>(n, 0));
      for (NodeId a = 0; a < n; ++a)
        for (NodeId b = 0; b < n; ++b)
          if (a != b) effect[a][b] = true_ace(scm, truth.vars.name(a), truth.vars.name(b));
      Rng rng(mix_seed(seed, 2 + gi));
      for (std::size_t k = 0; k < opt.orders_per_seed; ++k) {
        std::vector<NodeId> pi;
        if (k == 0) {
          pi = topological_sort(truth.adj);
        } else {
          pi.resize(n);
          std::iota(pi.begin(), pi.end(), NodeId{0});
          for (std::size_t i = n; i > 1; --i) std::swap(pi[i - 1], pi[rng.below(i)]);
        }
        std::vector<std::size_t> pos(n);
        for (std::size_t i = 0; i < n; ++i) pos[pi[i]] = i;
        AdjacencyMatrix est(n);
        for (auto [a, b] : truth.adj.edges()) {
          if (pos[a] < pos[b]) est.add_edge(a, b);
          else est.add_edge(b, a);
        }
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            if (!est.adjacent(pi[i], pi[j]) && rng.bernoulli(opt.extra_edge_prob)) est.add_edge(pi[i], pi[j]);
        if (k == 0) est = truth.adj;

        TopologicalOrder order(names_of(truth.vars, pi));
        double err = 0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
          auto z = order_adjustment_set(order, truth.vars.name(pi[i]));
          for (std::size_t j = i + 1; j < n; ++j) {
            auto est_ace = ace_adjusted(data, truth.vars.name(pi[i]), truth.vars.name(pi[j]), z.members);
            err += epsilon_ace(est_ace, effect[pi[i]][pi[j]]);
            ++pairs;
          }
        }
        rep.records[0].push_back(double(gi));
        rep.records[1].push_back(double(seed));
        rep.records[2].push_back(double(k));
        rep.records[3].push_back(double(dtop(order, truth)));
        rep.records[4].push_back(double(shd(est, truth.adj)));
        rep.records[5].push_back(pairs ? err / double(pairs) : 0.0);
      }
    }
  }

  const auto& d = rep.column("dtop");
  const auto& s = rep.column("shd");
  const auto& e = rep.column("eps_ace");
  std::vector<double> at0, above;
  double max_eps = 0, dtop_at_max = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    (d[i] == 0 ? at0 : above).push_back(e[i]);
    if (e[i] > max_eps) {
      max_eps = e[i];
      dtop_at_max = d[i];
    }
  }
  rep.summary = {{"spearman_dtop_eps_ace", spearman(d, e)},
                 {"spearman_shd_eps_ace", spearman(s, e)},
                 {"rows_dtop0", double(at0.size())},
                 {"eps_ace_mean_dtop0", describe(at0).mean},
                 {"eps_ace_max_dtop0", describe(at0).max},
                 {"eps_ace_mean_dtop_pos", describe(above).mean},
                 {"eps_ace_max", max_eps},
                 {"dtop_at_max_eps_ace", dtop_at_max},
                 {"dtop_max", describe(d).max}};
  return rep;
}

SimReport sim_triplet_vs_pairwise(const NoisyComparisonOptions& opt, std::uint64_t seed) {
  SimReport rep;
  rep.name = "triplet-vs-pairwise";
  rep.seed = seed;
  rep.parameters = {{"epsilon", fmt(opt.epsilon)},
                    {"nodes", std::to_string(opt.nodes)},
                    {"seeds", std::to_string(opt.seeds)},
                    {"edge_prob", fmt(opt.edge_prob)}};
  rep.columns = {"seed",         "dtop_triplet",        "dtop_pairwise",         "shd_triplet",
                 "shd_pairwise", "cycles_pairwise_raw", "cycles_triplet_raw",    "cycles_triplet_final",
                 "ties",         "third_slot_errors",   "third_slot_total",      "isolated_triplet",
                 "isolated_pairwise"};
  rep.records.assign(rep.columns.size(), {});

  for (std::size_t s = 0; s < opt.seeds; ++s) {
    Rng rng(mix_seed(seed, s));
    auto truth = random_dag(opt.nodes, opt.edge_prob, rng);
    EpsilonExpert primary({opt.epsilon, mix_seed(seed, 0x100000 + s), truth});
    EpsilonExpert tiebreak({opt.epsilon, mix_seed(seed, 0x200000 + s), truth});
    EpsilonExpert pairwise({opt.epsilon, mix_seed(seed, 0x300000 + s), truth});
    auto log = std::make_shared<Transcript>();
    primary.attach_transcript(log);

    auto tr = triplet_pipeline(truth.vars, primary, tiebreak);
    auto pr = pairwise_pipeline(truth.vars, pairwise);

    std::size_t slot_err = 0, slot_total = 0;
    for (const auto& rec : log->records()) {
      if (rec.query.kind != QueryKind::Tuple) continue;
      std::vector<NodeId> ids;
      for (const auto& qn : rec.query.nodes) ids.push_back(truth.vars.index(qn.name));
      std::sort(ids.begin(), ids.end());
      const auto& v = std::get<TupleVerdict>(rec.parsed);
      Choice got = Choice::NoEdge;
      for (const auto& [a, b] : v.edges) {
        if (a == truth.vars.name(ids[0]) && b == truth.vars.name(ids[1])) got = Choice::Forward;
        if (a == truth.vars.name(ids[1]) && b == truth.vars.name(ids[0])) got = Choice::Backward;
      }
      slot_err += got != perfect_pairwise(truth.adj, ids[0], ids[1], {ids[2]});
      ++slot_total;
    }

    const double row[] = {double(s),
                          double(dtop_ranked(tr.pruned_order, truth)),
                          double(dtop_ranked(pr.pruned_order, truth)),
                          double(shd(tr.final_dag.adj, truth.adj)),
                          double(shd(pr.merged.adj, truth.adj)),
                          double(pr.cycles_before_prune),
                          double(tr.cycles_before_prune),
                          double(count_cycles(tr.final_dag.adj)),
                          double(tr.ties),
                          double(slot_err),
                          double(slot_total),
                          double(tr.isolated.size()),
                          double(pr.isolated.size())};
    for (std::size_t c = 0; c < rep.columns.size(); ++c) rep.records[c].push_back(row[c]);
  }

  const auto& cyc = rep.column("cycles_pairwise_raw");
  const double cyclic = static_cast<double>(std::count_if(cyc.begin(), cyc.end(), [](double c) { return c > 0; }));
  const auto& se = rep.column("third_slot_errors");
  const auto& st = rep.column("third_slot_total");
  const double slot_rate = std::accumulate(se.begin(), se.end(), 0.0) / std::accumulate(st.begin(), st.end(), 0.0);
  rep.summary = {{"mean_dtop_triplet", describe(rep.column("dtop_triplet")).mean},
                 {"mean_dtop_pairwise", describe(rep.column("dtop_pairwise")).mean},
                 {"mean_shd_triplet", describe(rep.column("shd_triplet")).mean},
                 {"mean_shd_pairwise", describe(rep.column("shd_pairwise")).mean},
                 {"fraction_pairwise_cyclic", cyclic / double(opt.seeds)},
                 {"max_cycles_triplet_final", describe(rep.column("cycles_triplet_final")).max},
                 {"third_slot_error_rate", slot_rate},
                 {"mean_ties", describe(rep.column("ties")).mean}};
  return rep;
}

Prop23Result check_prop23(std::size_t n) {
  Prop23Result res;
  for (const auto& g : dag_classes(n)) {
    ++res.graphs;
    std::vector<NodeId> pi(n);
    std::iota(pi.begin(), pi.end(), NodeId{0});
    do {
      ++res.orders;
      const bool topo = forward_in(g, pi);
      bool all_valid = true;
      for (std::size_t i = 0; i < n && all_valid; ++i) {
        std::vector<NodeId> z(pi.begin(), pi.begin() + static_cast<std::ptrdiff_t>(i));
        for (std::size_t j = i + 1; j < n && all_valid; ++j)
          all_valid = is_valid_backdoor(g, pi[i], pi[j], z);
      }
      if (topo) {
        ++res.topological;
        if (!all_valid) ++res.prop2_failures;
      }
      if (topo != all_valid) ++res.prop3_failures;
    } while (std::next_permutation(pi.begin(), pi.end()));
  }
  return res;
}

}  // namespace corder

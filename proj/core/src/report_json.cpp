#include <corder/report.hpp>

#include <corder/error.hpp>

#include "json_io.hpp"

namespace corder {

using detail::json;

namespace {

// Re-express `g` over the variable order of `target`.
AdjacencyMatrix aligned(const CausalGraph& g, const VariableSet& target) {
  if (g.vars.size() != target.size()) throw UnknownNode("truth and report have different variables");
  AdjacencyMatrix out(target.size());
  for (auto [a, b] : g.adj.edges()) out.add_edge(target.index(g.vars.name(a)), target.index(g.vars.name(b)));
  return out;
}

json edges_json(const CausalGraph& g) {
  json out = json::array();
  for (const auto& [a, b] : g.named_edges()) out.push_back({a, b});
  return out;
}

}  // namespace

ReportMetrics evaluate_report(const ElicitationReport& r, const CausalGraph& truth) {
  ReportMetrics m;
  if (r.order) m.dtop = dtop_ranked(*r.order, truth);
  m.dtop_pruned = dtop_ranked(r.pruned_order, truth);
  m.shd = shd(aligned(r.final_dag, truth.vars), truth.adj);
  m.shd_merged = shd(aligned(r.merged, truth.vars), truth.adj);
  m.cycles = r.cycles_before_prune;
  m.isolated = r.isolated.size();
  m.total_nodes = r.vars.size();
  return m;
}

std::string report_to_json(const ElicitationReport& r, const CausalGraph* truth) {
  json j;
  j["method"] = r.method;
  j["strategy"] = r.strategy;
  j["variables"] = r.vars.names();
  j["tuples"] = r.tuples;
  j["calls"] = json::object();
  for (const auto& [k, v] : r.calls) j["calls"][k] = v;
  j["ties"] = r.ties;
  j["cycles_before_prune"] = r.cycles_before_prune;

  json beliefs = json::array();
  for (const auto& b : r.beliefs) {
    json e;
    e["pair"] = {b.a, b.b};
    e["votes"] = {{"forward", b.votes[0]}, {"backward", b.votes[1]}, {"no_edge", b.votes[2]}};
    e["entropy"] = b.entropy;
    e["resolved"] = std::string(choice_name(b.resolved));
    e["resolved_by"] = b.resolved_by;
    beliefs.push_back(std::move(e));
  }
  j["beliefs"] = std::move(beliefs);
  j["merged_edges"] = edges_json(r.merged);
  j["final_edges"] = edges_json(r.final_dag);
  j["order"] = r.order ? json(r.order->sequence()) : json(nullptr);
  j["pruned_order"] = r.pruned_order.sequence();
  j["isolated"] = json(std::vector<std::string>(r.isolated.begin(), r.isolated.end()));

  if (truth) {
    auto m = evaluate_report(r, *truth);
    json mj;
    mj["dtop"] = m.dtop ? json(*m.dtop) : json(nullptr);
    mj["dtop_pruned"] = m.dtop_pruned;
    mj["shd"] = m.shd;
    mj["shd_merged"] = m.shd_merged;
    mj["cycles"] = m.cycles;
    mj["isolated"] = m.isolated;
    mj["total_nodes"] = m.total_nodes;
    j["metrics"] = std::move(mj);
  }
  return j.dump(2) + "\n";
}

}  // namespace corder

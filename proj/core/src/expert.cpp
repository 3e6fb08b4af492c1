#include <corder/expert.hpp>

#include "json_io.hpp"

#include <algorithm>
#include <cctype>

namespace corder {

// --- choices ---------------------------------------------------------------

char choice_letter(Choice c) { return static_cast<char>('A' + static_cast<int>(c)); }

Choice choice_from_letter(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return Choice::Forward;
    case 'B': return Choice::Backward;
    case 'C': return Choice::NoEdge;
  }
  throw InvalidArgument(std::string("not a choice letter: ") + c);
}

std::string_view choice_name(Choice c) {
  switch (c) {
    case Choice::Forward: return "Forward";
    case Choice::Backward: return "Backward";
    case Choice::NoEdge: return "NoEdge";
  }
  return "?";
}

Choice parse_choice(std::string_view s) {
  if (s.size() == 1) return choice_from_letter(s[0]);
  for (auto c : {Choice::Forward, Choice::Backward, Choice::NoEdge})
    if (s == choice_name(c)) return c;
  throw InvalidArgument("not a choice: '" + std::string(s) + "'");
}

Choice flip(Choice c) {
  if (c == Choice::Forward) return Choice::Backward;
  if (c == Choice::Backward) return Choice::Forward;
  return c;
}

// --- queries ---------------------------------------------------------------

std::string ExpertQuery::fingerprint() const {
  std::string f = kind == QueryKind::Pairwise ? "pair" : "tuple";
  for (const auto& n : nodes) {
    f += '\x1f';
    f += n.name;
  }
  return f;
}

void ExpertQuery::validate() const {
  if (kind == QueryKind::Pairwise && nodes.size() != 2) throw InvalidArgument("pairwise query needs 2 nodes");
  if (kind == QueryKind::Tuple && (nodes.size() < 3 || nodes.size() > 4))
    throw InvalidArgument("tuple query needs 3 or 4 nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[i].name == nodes[j].name) throw InvalidArgument("query repeats node '" + nodes[i].name + "'");
}

ExpertQuery make_pair_query(const VariableSet& vars, NodeId a, NodeId b, std::string context) {
  ExpertQuery q;
  q.kind = QueryKind::Pairwise;
  q.nodes = {{vars.name(a), vars.description(a)}, {vars.name(b), vars.description(b)}};
  q.context = std::move(context);
  q.all_nodes = vars.names();
  return q;
}

ExpertQuery make_tuple_query(const VariableSet& vars, const std::vector<NodeId>& nodes, std::string context) {
  ExpertQuery q;
  q.kind = QueryKind::Tuple;
  q.strategy = "triplet";
  for (auto id : nodes) q.nodes.push_back({vars.name(id), vars.description(id)});
  q.context = std::move(context);
  q.all_nodes = vars.names();
  return q;
}

// --- transcripts -----------------------------------------------------------

void Transcript::append(TranscriptRecord r) {
  std::lock_guard lk(mu_);
  records_.push_back(std::move(r));
}

std::vector<TranscriptRecord> Transcript::records() const {
  std::lock_guard lk(mu_);
  return records_;
}

std::size_t Transcript::size() const {
  std::lock_guard lk(mu_);
  return records_.size();
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& r : records()) out += transcript_line(r) + "\n";
  return out;
}

std::string transcript_line(const TranscriptRecord& r) { return detail::to_json(r).dump(); }

TranscriptRecord parse_transcript_line(std::string_view line) {
  try {
    return detail::record_from_json(detail::json::parse(line));
  } catch (const detail::json::exception& e) {
    throw ParseError(std::string("transcript record: ") + e.what());
  }
}

std::vector<TranscriptRecord> parse_transcript(std::string_view jsonl) {
  std::vector<TranscriptRecord> out;
  std::size_t pos = 0, lineno = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(parse_transcript_line(line));
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::string verdict_text(const Verdict& v) { return detail::to_json(v).dump(); }

// --- base ------------------------------------------------------------------

PairVerdict Expert::ask_pair(const ExpertQuery& q) {
  q.validate();
  if (q.kind != QueryKind::Pairwise) throw InvalidArgument("ask_pair needs a pairwise query");
  std::string prompt, raw;
  auto v = do_pair(q, prompt, raw);
  ++calls_;
  if (transcript_) transcript_->append({q, std::move(prompt), std::move(raw), v});
  return v;
}

TupleVerdict Expert::ask_tuple(const ExpertQuery& q) {
  q.validate();
  if (q.kind != QueryKind::Tuple) throw InvalidArgument("ask_tuple needs a tuple query");
  std::string prompt, raw;
  auto v = do_tuple(q, prompt, raw);
  ++calls_;
  if (transcript_) transcript_->append({q, std::move(prompt), std::move(raw), v});
  return v;
}

// --- perfect ---------------------------------------------------------------

bool path_avoiding(const AdjacencyMatrix& g, NodeId a, NodeId b, const std::vector<bool>& aux) {
  const auto n = g.size();
  std::vector<bool> seen(n, false);
  std::vector<NodeId> todo{a};
  seen[a] = true;
  while (!todo.empty()) {
    auto u = todo.back();
    todo.pop_back();
    for (NodeId v = 0; v < n; ++v) {
      if (!g.has_edge(u, v) || seen[v]) continue;
      if (v == b) return true;
      if (!aux.empty() && aux[v]) continue;
      seen[v] = true;
      todo.push_back(v);
    }
  }
  return false;
}

Choice perfect_pairwise(const AdjacencyMatrix& truth, NodeId a, NodeId b, const std::vector<NodeId>& aux) {
  if (a == b) throw InvalidArgument("perfect_pairwise: identical endpoints");
  std::vector<bool> mask(truth.size(), false);
  for (auto o : aux) {
    if (o == a || o == b) throw InvalidArgument("perfect_pairwise: auxiliary set contains an endpoint");
    mask[o] = true;
  }
  if (path_avoiding(truth, a, b, mask)) return Choice::Forward;
  if (path_avoiding(truth, b, a, mask)) return Choice::Backward;
  return Choice::NoEdge;
}

namespace {

std::vector<NodeId> resolve(const CausalGraph& g, const ExpertQuery& q) {
  std::vector<NodeId> ids;
  for (const auto& n : q.nodes) ids.push_back(g.vars.index(n.name));
  return ids;
}

}  // namespace

PairVerdict PerfectExpert::do_pair(const ExpertQuery& q, std::string&, std::string&) {
  auto ids = resolve(truth_, q);
  return {perfect_pairwise(truth_.adj, ids[0], ids[1]), {}};
}

TupleVerdict PerfectExpert::do_tuple(const ExpertQuery& q, std::string&, std::string&) {
  auto ids = resolve(truth_, q);
  TupleVerdict v;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      std::vector<NodeId> aux;
      for (std::size_t k = 0; k < ids.size(); ++k)
        if (k != i && k != j) aux.push_back(ids[k]);
      auto c = perfect_pairwise(truth_.adj, ids[i], ids[j], aux);
      if (c == Choice::Forward) v.edges.emplace_back(q.nodes[i].name, q.nodes[j].name);
      if (c == Choice::Backward) v.edges.emplace_back(q.nodes[j].name, q.nodes[i].name);
    }
  return v;
}

// --- epsilon ---------------------------------------------------------------

Choice epsilon_choice(Choice correct, ChoiceSet forbidden, double epsilon, Rng& rng) {
  double w[3];
  double total = 0.0;
  const bool correct_allowed = !(forbidden & choice_bit(correct));
  for (int k = 0; k < 3; ++k) {
    auto c = static_cast<Choice>(k);
    if (forbidden & choice_bit(c))
      w[k] = 0.0;
    else if (c == correct)
      w[k] = 1.0 - epsilon;
    else
      w[k] = correct_allowed ? epsilon / 2.0 : 0.5;
    total += w[k];
  }
  if (total <= 0.0) throw InvalidArgument("epsilon_choice: every choice is forbidden");
  double u = rng.uniform() * total;
  for (int k = 0; k < 3; ++k) {
    if (w[k] == 0.0) continue;
    if (u < w[k]) return static_cast<Choice>(k);
    u -= w[k];
  }
  for (int k = 2; k >= 0; --k)
    if (w[k] > 0.0) return static_cast<Choice>(k);
  return correct;
}

std::vector<std::pair<std::size_t, std::size_t>> tuple_pair_sequence(std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> seq;
  for (std::size_t m = size; m-- > 1;)
    for (std::size_t k = 0; k < m; ++k) {
      if (m == size - 1)
        seq.emplace_back(m, k);
      else
        seq.emplace_back(k, m);
    }
  return seq;
}

std::vector<Edge> epsilon_tuple_edges(const AdjacencyMatrix& truth, const std::vector<NodeId>& nodes, double epsilon,
                                      Rng& rng) {
  const auto k = nodes.size();
  AdjacencyMatrix local(k);
  for (auto [p, q] : tuple_pair_sequence(k)) {
    std::vector<NodeId> aux;
    for (std::size_t r = 0; r < k; ++r)
      if (r != p && r != q) aux.push_back(nodes[r]);
    const auto correct = perfect_pairwise(truth, nodes[p], nodes[q], aux);
    ChoiceSet forbidden = 0;
    if (path_avoiding(local, q, p, {})) forbidden |= choice_bit(Choice::Forward);
    if (path_avoiding(local, p, q, {})) forbidden |= choice_bit(Choice::Backward);
    const auto c = epsilon_choice(correct, forbidden, epsilon, rng);
    if (c == Choice::Forward) local.add_edge(p, q);
    if (c == Choice::Backward) local.add_edge(q, p);
  }
  std::vector<Edge> out;
  for (auto [a, b] : local.edges()) out.emplace_back(nodes[a], nodes[b]);
  return out;
}

EpsilonExpert::EpsilonExpert(EpsilonExpertConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.epsilon > 0.0 && cfg_.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
}

Rng EpsilonExpert::rng_for(const ExpertQuery& q) const { return Rng(mix_seed(cfg_.seed, fingerprint(q.fingerprint()))); }

PairVerdict EpsilonExpert::do_pair(const ExpertQuery& q, std::string&, std::string&) {
  auto ids = resolve(cfg_.truth, q);
  auto rng = rng_for(q);
  const auto correct = perfect_pairwise(cfg_.truth.adj, ids[0], ids[1]);
  return {epsilon_choice(correct, 0, cfg_.epsilon, rng), {}};
}

TupleVerdict EpsilonExpert::do_tuple(const ExpertQuery& q, std::string&, std::string&) {
  auto ids = resolve(cfg_.truth, q);
  // orientation sequence is defined over ascending graph indices
  auto sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  auto rng = rng_for(q);
  TupleVerdict v;
  for (auto [a, b] : epsilon_tuple_edges(cfg_.truth.adj, sorted, cfg_.epsilon, rng))
    v.edges.emplace_back(cfg_.truth.vars.name(a), cfg_.truth.vars.name(b));
  return v;
}

// --- scripted --------------------------------------------------------------

ScriptedExpert::ScriptedExpert(const std::vector<TranscriptRecord>& records) {
  for (const auto& r : records) queue_[r.query.fingerprint()].push_back(r);
}

std::size_t ScriptedExpert::remaining() const {
  std::lock_guard lk(mu_);
  std::size_t n = 0;
  for (const auto& [_, q] : queue_) n += q.size();
  return n;
}

TranscriptRecord ScriptedExpert::next(const ExpertQuery& q) {
  std::lock_guard lk(mu_);
  auto it = queue_.find(q.fingerprint());
  if (it == queue_.end() || it->second.empty()) {
    std::string names;
    for (const auto& n : q.nodes) names += (names.empty() ? "" : ", ") + n.name;
    throw ExpertError("transcript has no answer for query (" + names + ")");
  }
  auto r = std::move(it->second.front());
  it->second.pop_front();
  return r;
}

PairVerdict ScriptedExpert::do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) {
  auto r = next(q);
  prompt = r.prompt;
  raw = r.raw_response;
  if (auto* p = std::get_if<PairVerdict>(&r.parsed)) return *p;
  throw ExpertError("transcript holds a tuple verdict for a pairwise query");
}

TupleVerdict ScriptedExpert::do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) {
  auto r = next(q);
  prompt = r.prompt;
  raw = r.raw_response;
  if (auto* t = std::get_if<TupleVerdict>(&r.parsed)) return *t;
  throw ExpertError("transcript holds a pairwise verdict for a tuple query");
}

// --- json ------------------------------------------------------------------

namespace detail {

json to_json(const ExpertQuery& q) {
  json j;
  j["kind"] = q.kind == QueryKind::Pairwise ? "pairwise" : "tuple";
  j["nodes"] = json::array();
  for (const auto& n : q.nodes) j["nodes"].push_back({{"name", n.name}, {"description", n.description}});
  j["context"] = q.context;
  j["strategy"] = q.strategy;
  j["all_nodes"] = q.all_nodes;
  j["known_edges"] = json::array();
  for (const auto& [a, b] : q.known_edges) j["known_edges"].push_back({a, b});
  return j;
}

ExpertQuery query_from_json(const json& j) {
  ExpertQuery q;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "pairwise")
    q.kind = QueryKind::Pairwise;
  else if (kind == "tuple")
    q.kind = QueryKind::Tuple;
  else
    throw ParseError("unknown query kind '" + kind + "'");
  for (const auto& n : j.at("nodes")) {
    if (n.is_string())
      q.nodes.push_back({n.get<std::string>(), {}});
    else
      q.nodes.push_back({n.at("name").get<std::string>(), n.value("description", std::string{})});
  }
  q.context = j.value("context", std::string{});
  q.strategy = j.value("strategy", std::string(q.kind == QueryKind::Pairwise ? "base" : "triplet"));
  if (j.contains("all_nodes")) q.all_nodes = j["all_nodes"].get<std::vector<std::string>>();
  if (j.contains("known_edges"))
    for (const auto& e : j["known_edges"]) q.known_edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  q.validate();
  return q;
}

json to_json(const Verdict& v) {
  json j;
  if (auto* p = std::get_if<PairVerdict>(&v)) {
    j["choice"] = std::string(1, choice_letter(p->choice));
    if (!p->rationale.empty()) j["rationale"] = p->rationale;
  } else {
    const auto& t = std::get<TupleVerdict>(v);
    j["edges"] = json::array();
    for (const auto& [a, b] : t.edges) j["edges"].push_back({a, b});
    if (!t.rationale.empty()) j["rationale"] = t.rationale;
  }
  return j;
}

Verdict verdict_from_json(const json& j, QueryKind kind) {
  if (kind == QueryKind::Pairwise) {
    PairVerdict p;
    p.choice = parse_choice(j.at("choice").get<std::string>());
    p.rationale = j.value("rationale", std::string{});
    return p;
  }
  TupleVerdict t;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw ParseError("tuple edges are [src, dst] pairs");
    t.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  t.rationale = j.value("rationale", std::string{});
  return t;
}

json to_json(const TranscriptRecord& r) {
  json j;
  j["query"] = to_json(r.query);
  if (!r.prompt.empty()) j["prompt"] = r.prompt;
  j["raw_response"] = r.raw_response;
  j["parsed"] = to_json(r.parsed);
  return j;
}

TranscriptRecord record_from_json(const json& j) {
  TranscriptRecord r;
  r.query = query_from_json(j.at("query"));
  r.prompt = j.value("prompt", std::string{});
  r.raw_response = j.value("raw_response", std::string{});
  r.parsed = verdict_from_json(j.at("parsed"), r.query.kind);
  return r;
}

}  // namespace detail

}  // namespace corder

#include <corder/annotation.hpp>

#include <corder/bundled.hpp>
#include <corder/edge_list.hpp>
#include <corder/elicitation.hpp>
#include <corder/error.hpp>
#include <corder/report.hpp>

#include "json_io.hpp"

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <random>

namespace corder {

using detail::json;
using Clock = std::chrono::system_clock;

struct SessionStore::Session {
  struct Entry {
    std::string id;
    ExpertQuery query;
    std::optional<Verdict> answer;
  };

  std::string id;
  SessionConfig cfg;
  SessionStatus status = SessionStatus::Open;
  std::int64_t created = 0;  // unix seconds
  std::int64_t expires = 0;
  std::vector<Entry> entries;
  std::size_t next_seq = 1;
  std::vector<TranscriptRecord> transcript;
  // answers restored from the journal, waiting for the rerun pipeline
  std::map<std::string, std::deque<Verdict>> recovered;
  bool finished = false;
  std::string report;
  std::string error;

  Entry* find(const std::string& qid) {
    for (auto& e : entries)
      if (e.id == qid) return &e;
    return nullptr;
  }
};

namespace {

std::int64_t now_s() {
  return std::chrono::duration_cast<std::chrono::seconds>(Clock::now().time_since_epoch()).count();
}

std::string random_id() {
  std::random_device rd;
  std::uint64_t v = (std::uint64_t{rd()} << 32) ^ rd();
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < 16; ++i) out += hex[(v >> (4 * i)) & 0xf];
  return out;
}

json config_json(const SessionConfig& c) {
  return {{"method", c.method},
          {"graph", c.graph},
          {"strategy", c.strategy},
          {"context", c.context},
          {"variables", c.variables},
          {"answer_timeout_s", c.answer_timeout.count()},
          {"ttl_s", c.ttl.count()}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  c.method = j.value("method", c.method);
  c.graph = j.value("graph", c.graph);
  c.strategy = j.value("strategy", c.strategy);
  c.context = j.value("context", c.context);
  c.variables = j.value("variables", c.variables);
  c.answer_timeout = std::chrono::seconds(j.value("answer_timeout_s", c.answer_timeout.count()));
  c.ttl = std::chrono::seconds(j.value("ttl_s", c.ttl.count()));
  return c;
}

std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Empty when acceptable, else a message; cycle filled for cyclic answers.
std::string check_verdict(const ExpertQuery& q, const Verdict& v, std::vector<std::string>& cycle) {
  if (q.kind == QueryKind::Pairwise) {
    return std::holds_alternative<PairVerdict>(v) ? "" : "pairwise query needs a choice";
  }
  if (!std::holds_alternative<TupleVerdict>(v)) return "tuple query needs an edge list";
  std::vector<std::string> names;
  for (const auto& n : q.nodes) names.push_back(n.name);
  VariableSet local(names);
  AdjacencyMatrix g(names.size());
  for (const auto& [a, b] : std::get<TupleVerdict>(v).edges) {
    auto ia = local.find(a), ib = local.find(b);
    if (!ia || !ib) return "edge " + a + " -> " + b + " names a node outside the query";
    if (*ia == *ib) return "self-loop on " + a;
    if (g.has_edge(*ia, *ib)) return "duplicate edge " + a + " -> " + b;
    g.add_edge(*ia, *ib);
  }
  if (auto c = find_cycle(g)) {
    cycle = names_of(local, *c);
    return "answer contains a cycle";
  }
  return "";
}

}  // namespace

SessionStore::SessionStore(std::string journal_path) : journal_path_(std::move(journal_path)) {
  if (journal_path_.empty()) return;
  if (std::filesystem::exists(journal_path_)) replay(read_file(journal_path_));
  journal_.open(journal_path_, std::ios::app);
  if (!journal_) throw InvalidArgument("cannot open journal " + journal_path_);
}

SessionStore::~SessionStore() { shutdown(); }

void SessionStore::shutdown() {
  std::lock_guard lk(mu_);
  shutting_down_ = true;
  cv_.notify_all();
}

void SessionStore::journal(const std::string& line) {
  if (!journal_.is_open()) return;
  journal_ << line << '\n';
  journal_.flush();
}

void SessionStore::replay(const std::string& text) {
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      // a torn final line from a crash is dropped
      if (pos >= text.size()) break;
      throw ParseError("bad journal line", lineno);
    }
    const std::string ev = j.at("event");
    const std::string sid = j.at("session");
    if (ev == "create") {
      auto s = std::make_unique<Session>();
      s->id = sid;
      s->cfg = config_from_json(j.at("config"));
      s->created = j.at("created");
      s->expires = j.at("expires");
      sessions_[sid] = std::move(s);
      continue;
    }
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) throw ParseError("journal refers to unknown session " + sid, lineno);
    auto& s = *it->second;
    if (ev == "query") {
      s.entries.push_back({j.at("query_id"), detail::query_from_json(j.at("query")), std::nullopt});
      s.next_seq = std::max(s.next_seq, std::stoul(j.at("query_id").get<std::string>().substr(1)) + 1);
    } else if (ev == "answer") {
      auto* e = s.find(j.at("query_id"));
      if (!e) throw ParseError("journal answers an unknown query", lineno);
      e->answer = detail::verdict_from_json(j.at("verdict"), e->query.kind);
    } else if (ev == "close") {
      s.status = SessionStatus::Closed;
    }
  }
  // answered work is kept for the pipeline rerun; open questions get re-asked
  for (auto& [_, s] : sessions_) {
    for (auto& e : s->entries) {
      if (!e.answer) continue;
      s->recovered[e.query.fingerprint()].push_back(*e.answer);
      if (s->status == SessionStatus::Closed) {
        s->transcript.push_back({e.query, {}, verdict_text(*e.answer), *e.answer});
      }
    }
    if (s->status == SessionStatus::Open) s->entries.clear();
  }
}

bool SessionStore::expired(const Session& s) const { return s.expires != 0 && now_s() > s.expires; }

SessionStore::Session& SessionStore::get(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw InvalidArgument("unknown session " + id);
  return *it->second;
}

const SessionStore::Session& SessionStore::get(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw InvalidArgument("unknown session " + id);
  return *it->second;
}

std::string SessionStore::create(SessionConfig cfg) {
  if (cfg.method != "pairwise" && cfg.method != "triplet") throw InvalidArgument("method must be pairwise or triplet");
  if (cfg.variables.empty() && !cfg.graph.empty()) {
    auto g = load_graph_source(cfg.graph);
    cfg.variables = g.vars.names();
    if (cfg.context.empty()) {
      try {
        cfg.context = bundled_context(cfg.graph);
      } catch (const UnknownGraph&) {
      }
    }
  }
  const std::size_t need = cfg.method == "triplet" ? 3 : 2;
  if (cfg.variables.size() < need) throw InvalidArgument("session needs at least " + std::to_string(need) + " variables");
  VariableSet(cfg.variables);  // rejects duplicates

  auto s = std::make_unique<Session>();
  s->cfg = std::move(cfg);
  s->created = now_s();
  s->expires = s->created + s->cfg.ttl.count();
  std::lock_guard lk(mu_);
  do s->id = random_id();
  while (sessions_.contains(s->id));
  const auto id = s->id;
  journal(json{{"event", "create"},
               {"session", id},
               {"config", config_json(s->cfg)},
               {"created", s->created},
               {"expires", s->expires}}
              .dump());
  sessions_[id] = std::move(s);
  return id;
}

bool SessionStore::exists(const std::string& id) const {
  std::lock_guard lk(mu_);
  return sessions_.contains(id);
}

std::optional<SessionConfig> SessionStore::config(const std::string& id) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second->cfg;
}

std::vector<std::string> SessionStore::session_ids() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [k, _] : sessions_) out.push_back(k);
  return out;
}

std::optional<PendingQuery> SessionStore::next(const std::string& id, std::chrono::milliseconds wait) {
  std::unique_lock lk(mu_);
  auto& s = get(id);
  auto pending = [&]() -> Session::Entry* {
    if (s.status == SessionStatus::Closed || expired(s)) return nullptr;
    for (auto& e : s.entries)
      if (!e.answer) return &e;
    return nullptr;
  };
  auto deadline = std::chrono::steady_clock::now() + wait;
  while (!pending() && s.status == SessionStatus::Open && !s.finished && !shutting_down_ &&
         std::chrono::steady_clock::now() < deadline) {
    cv_.wait_until(lk, deadline);
  }
  if (auto* e = pending()) return PendingQuery{e->id, e->query};
  return std::nullopt;
}

SubmitResult SessionStore::submit(const std::string& id, const std::string& query_id, const Verdict& v) {
  using K = SubmitResult::Kind;
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return {K::UnknownSession, "unknown session", {}};
  auto& s = *it->second;
  if (s.status == SessionStatus::Closed || expired(s)) return {K::Closed, "session is closed", {}};
  auto* e = s.find(query_id);
  if (!e) return {K::UnknownQuery, "unknown query", {}};
  if (e->answer) return {K::Duplicate, "query already answered", {}};
  std::vector<std::string> cycle;
  auto msg = check_verdict(e->query, v, cycle);
  if (!cycle.empty()) return {K::Cyclic, msg, cycle};
  if (!msg.empty()) return {K::Invalid, msg, {}};
  e->answer = v;
  journal(json{{"event", "answer"}, {"session", id}, {"query_id", query_id}, {"verdict", detail::to_json(v)}}.dump());
  cv_.notify_all();
  return {K::Accepted, "accepted", {}};
}

Verdict SessionStore::ask(const std::string& id, const ExpertQuery& q) {
  std::unique_lock lk(mu_);
  auto& s = get(id);
  if (s.status == SessionStatus::Closed || expired(s)) throw SessionClosed("session " + id + " is closed");
  if (shutting_down_) throw SessionClosed("service is shutting down");

  auto rec = s.recovered.find(q.fingerprint());
  if (rec != s.recovered.end() && !rec->second.empty()) {
    auto v = rec->second.front();
    rec->second.pop_front();
    s.transcript.push_back({q, {}, verdict_text(v), v});
    return v;
  }

  const std::string qid = "q" + std::to_string(s.next_seq++);
  s.entries.push_back({qid, q, std::nullopt});
  journal(json{{"event", "query"}, {"session", id}, {"query_id", qid}, {"query", detail::to_json(q)}}.dump());
  cv_.notify_all();

  auto deadline = std::chrono::steady_clock::now() + s.cfg.answer_timeout;
  for (;;) {
    auto* e = s.find(qid);
    if (e && e->answer) {
      auto v = *e->answer;
      s.transcript.push_back({q, {}, verdict_text(v), v});
      return v;
    }
    if (s.status == SessionStatus::Closed || expired(s)) throw SessionClosed("session " + id + " was closed");
    if (shutting_down_) throw SessionClosed("service is shutting down");
    if (cv_.wait_until(lk, deadline) == std::cv_status::timeout && std::chrono::steady_clock::now() >= deadline) {
      e = s.find(qid);
      if (!(e && e->answer)) throw Timeout("no answer for " + qid);
    }
  }
}

std::string SessionStore::close(const std::string& id) {
  std::lock_guard lk(mu_);
  auto& s = get(id);
  if (s.status == SessionStatus::Open) {
    s.status = SessionStatus::Closed;
    journal(json{{"event", "close"}, {"session", id}}.dump());
    cv_.notify_all();
  }
  std::string out;
  for (const auto& r : s.transcript) out += transcript_line(r) + "\n";
  return out;
}

std::string SessionStore::transcript(const std::string& id) const {
  std::lock_guard lk(mu_);
  std::string out;
  for (const auto& r : get(id).transcript) out += transcript_line(r) + "\n";
  return out;
}

SessionProgress SessionStore::progress(const std::string& id) const {
  std::lock_guard lk(mu_);
  const auto& s = get(id);
  SessionProgress p;
  p.id = s.id;
  p.method = s.cfg.method;
  p.status = (s.status == SessionStatus::Closed || expired(s)) ? SessionStatus::Closed : SessionStatus::Open;
  p.answered = s.transcript.size();
  for (const auto& e : s.entries) p.pending += e.answer ? 0 : 1;
  const std::size_t n = s.cfg.variables.size();
  p.expected = s.cfg.method == "triplet" ? choose(n, 3) : choose(n, 2);
  p.finished = s.finished;
  p.report_json = s.report;
  p.error = s.error;

  if (s.cfg.method == "triplet") {
    VariableSet vars(s.cfg.variables);
    std::map<Edge, std::array<std::size_t, 3>> votes;
    for (const auto& r : s.transcript) {
      if (r.query.kind != QueryKind::Tuple) continue;
      std::vector<NodeId> ids;
      for (const auto& qn : r.query.nodes) ids.push_back(vars.index(qn.name));
      try {
        tally_tuple(vars, ids, std::get<TupleVerdict>(r.parsed), votes);
      } catch (const ExpertError&) {
      }
    }
    for (const auto& [pair, v] : votes) {
      if (v[0] + v[1] + v[2] < n - 2) continue;
      p.resolved.push_back({vars.name(pair.first), vars.name(pair.second), v});
    }
  }
  return p;
}

void SessionStore::set_result(const std::string& id, std::string report_json) {
  std::lock_guard lk(mu_);
  auto& s = get(id);
  s.finished = true;
  s.report = std::move(report_json);
  cv_.notify_all();
}

void SessionStore::set_error(const std::string& id, std::string message) {
  std::lock_guard lk(mu_);
  auto& s = get(id);
  s.finished = true;
  s.error = std::move(message);
  cv_.notify_all();
}

PairVerdict HumanExpert::do_pair(const ExpertQuery& q, std::string&, std::string& raw) {
  auto v = store_.ask(session_, q);
  raw = verdict_text(v);
  return std::get<PairVerdict>(v);
}

TupleVerdict HumanExpert::do_tuple(const ExpertQuery& q, std::string&, std::string& raw) {
  auto v = store_.ask(session_, q);
  raw = verdict_text(v);
  return std::get<TupleVerdict>(v);
}

SessionRunner::~SessionRunner() { join_all(); }

void SessionRunner::start(const std::string& id) {
  auto cfg = store_.config(id);
  if (!cfg) throw InvalidArgument("unknown session " + id);
  std::lock_guard lk(mu_);
  threads_.emplace_back([this, id, cfg = *cfg] {
    try {
      VariableSet vars(cfg.variables);
      if (!cfg.graph.empty()) {
        try {
          auto g = load_graph_source(cfg.graph);
          if (g.vars.names() == cfg.variables) vars = g.vars;
        } catch (const Error&) {
        }
      }
      HumanExpert human(store_, id);
      ElicitationReport r;
      if (cfg.method == "pairwise") {
        r = pairwise_pipeline(vars, human, {cfg.strategy, cfg.context});
      } else {
        TripletOptions opt;
        opt.context = cfg.context;
        r = triplet_pipeline(vars, human, human, opt);
      }
      store_.set_result(id, report_to_json(r));
    } catch (const std::exception& e) {
      store_.set_error(id, e.what());
    }
  });
}

void SessionRunner::resume_all() {
  for (const auto& id : store_.session_ids()) {
    auto p = store_.progress(id);
    if (p.status == SessionStatus::Open && !p.finished) start(id);
  }
}

void SessionRunner::join_all() {
  std::vector<std::thread> ts;
  {
    std::lock_guard lk(mu_);
    ts.swap(threads_);
  }
  for (auto& t : ts)
    if (t.joinable()) t.join();
}

std::string annotation_token_from_env() {
  const char* t = std::getenv("CORDER_ANNOTATION_TOKEN");
  return t ? t : "";
}

}  // namespace corder

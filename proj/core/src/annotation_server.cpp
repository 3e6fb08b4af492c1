#include <corder/annotation.hpp>

#include <corder/error.hpp>

#include "json_io.hpp"

#include <httplib.h>

#include <algorithm>

namespace corder {

using detail::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  send(res, status, extra);
}

json progress_json(const SessionProgress& p) {
  json j;
  j["session"] = p.id;
  j["method"] = p.method;
  j["status"] = p.status == SessionStatus::Open ? "open" : "closed";
  j["answered"] = p.answered;
  j["pending"] = p.pending;
  j["expected"] = p.expected;
  json tallies = json::array();
  for (const auto& t : p.resolved)
    tallies.push_back({{"pair", {t.a, t.b}},
                       {"votes", {{"forward", t.votes[0]}, {"backward", t.votes[1]}, {"no_edge", t.votes[2]}}}});
  j["resolved"] = std::move(tallies);
  j["finished"] = p.finished;
  if (!p.report_json.empty()) j["report"] = json::parse(p.report_json);
  if (!p.error.empty()) j["pipeline_error"] = p.error;
  return j;
}

}  // namespace

struct AnnotationServer::Impl {
  SessionStore& store;
  ServerOptions opt;
  SessionRunner runner;
  httplib::Server http;
  std::thread thread;
  int port = 0;

  Impl(SessionStore& s, ServerOptions o) : store(s), opt(std::move(o)), runner(s) {}

  bool authorized(const httplib::Request& req, httplib::Response& res) const {
    if (opt.token.empty()) return true;
    if (req.get_header_value("Authorization") == "Bearer " + opt.token) return true;
    fail(res, 401, "missing or wrong bearer token");
    return false;
  }

  void routes() {
    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      SessionConfig cfg;
      try {
        auto j = json::parse(req.body.empty() ? "{}" : req.body);
        cfg.method = j.value("method", cfg.method);
        cfg.graph = j.value("graph", cfg.graph);
        cfg.strategy = j.value("strategy", cfg.strategy);
        cfg.context = j.value("context", cfg.context);
        cfg.variables = j.value("variables", cfg.variables);
        if (j.contains("answer_timeout_s")) cfg.answer_timeout = std::chrono::seconds(j.at("answer_timeout_s").get<long>());
        if (j.contains("ttl_s")) cfg.ttl = std::chrono::seconds(j.at("ttl_s").get<long>());
      } catch (const json::exception& e) {
        return fail(res, 400, std::string("bad request body: ") + e.what());
      }
      std::string id;
      try {
        id = store.create(cfg);
      } catch (const Error& e) {
        return fail(res, 400, e.what());
      }
      runner.start(id);
      auto c = *store.config(id);
      send(res, 201, {{"session", id}, {"method", c.method}, {"variables", c.variables}, {"context", c.context}});
    });

    http.Get(R"(/sessions/([A-Za-z0-9]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      const std::string id = req.matches[1];
      if (!store.exists(id)) return fail(res, 404, "unknown session");
      long wait = 0;
      if (req.has_param("wait")) {
        try {
          wait = std::stol(req.get_param_value("wait"));
        } catch (const std::exception&) {
          return fail(res, 400, "wait must be an integer number of milliseconds");
        }
      }
      wait = std::clamp<long>(wait, 0, static_cast<long>(opt.max_wait.count()));
      auto q = store.next(id, std::chrono::milliseconds(wait));
      if (!q) return send(res, 200, {{"query", nullptr}, {"progress", progress_json(store.progress(id))}});
      send(res, 200, {{"query_id", q->id}, {"query", detail::to_json(q->query)}});
    });

    http.Post(R"(/sessions/([A-Za-z0-9]+)/answers)", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      const std::string id = req.matches[1];
      if (!store.exists(id)) return fail(res, 404, "unknown session");
      std::string qid;
      Verdict v;
      try {
        auto j = json::parse(req.body);
        qid = j.at("query_id").get<std::string>();
        const auto& vj = j.at("verdict");
        v = vj.contains("edges") ? detail::verdict_from_json(vj, QueryKind::Tuple)
                                 : detail::verdict_from_json(vj, QueryKind::Pairwise);
      } catch (const std::exception& e) {
        return fail(res, 400, std::string("bad answer: ") + e.what());
      }
      auto r = store.submit(id, qid, v);
      using K = SubmitResult::Kind;
      switch (r.kind) {
        case K::Accepted: return send(res, 200, {{"status", "accepted"}, {"query_id", qid}});
        case K::UnknownSession:
        case K::UnknownQuery: return fail(res, 404, r.message);
        case K::Duplicate:
        case K::Closed: return fail(res, 409, r.message);
        case K::Cyclic: return fail(res, 422, r.message, {{"cycle", r.cycle}});
        case K::Invalid: return fail(res, 422, r.message);
      }
    });

    http.Post(R"(/sessions/([A-Za-z0-9]+)/close)", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      const std::string id = req.matches[1];
      if (!store.exists(id)) return fail(res, 404, "unknown session");
      auto t = store.close(id);
      auto n = static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
      send(res, 200, {{"session", id}, {"records", n}, {"transcript", t}});
    });

    http.Get(R"(/sessions/([A-Za-z0-9]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      const std::string id = req.matches[1];
      if (!store.exists(id)) return fail(res, 404, "unknown session");
      send(res, 200, progress_json(store.progress(id)));
    });
  }
};

AnnotationServer::AnnotationServer(SessionStore& store, ServerOptions opt)
    : impl_(std::make_unique<Impl>(store, std::move(opt))) {
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start() {
  auto& im = *impl_;
  im.runner.resume_all();
  if (im.opt.port == 0) {
    im.port = im.http.bind_to_any_port(im.opt.host);
  } else {
    if (!im.http.bind_to_port(im.opt.host, im.opt.port)) im.port = -1;
    else im.port = im.opt.port;
  }
  if (im.port < 0) throw EndpointError("cannot bind " + im.opt.host + ":" + std::to_string(im.opt.port));
  im.thread = std::thread([&im] { im.http.listen_after_bind(); });
  im.http.wait_until_ready();
  return im.port;
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->store.shutdown();
  impl_->runner.join_all();
}

}  // namespace corder

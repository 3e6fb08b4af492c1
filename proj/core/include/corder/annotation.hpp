#pragma once

#include <corder/expert.hpp>

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace corder {

struct SessionConfig {
  std::string method = "triplet";  // pairwise | triplet
  std::string graph;               // bundled name or path; names the variables
  std::string strategy = "base";   // pairwise prompt flavour
  std::string context;
  std::vector<std::string> variables;
  /// How long the pipeline waits for one answer.
  std::chrono::seconds answer_timeout{3600};
  std::chrono::seconds ttl{24 * 3600};
};

enum class SessionStatus { Open, Closed };

struct PendingQuery {
  std::string id;
  ExpertQuery query;
};

struct SubmitResult {
  enum class Kind { Accepted, UnknownSession, UnknownQuery, Duplicate, Cyclic, Invalid, Closed };
  Kind kind = Kind::Accepted;
  std::string message;
  std::vector<std::string> cycle;
};

struct PairTally {
  std::string a;
  std::string b;
  std::array<std::size_t, 3> votes{};
};

struct SessionProgress {
  std::string id;
  std::string method;
  SessionStatus status = SessionStatus::Open;
  std::size_t answered = 0;
  std::size_t pending = 0;
  /// Queries the pipeline will issue before tie-breaks.
  std::size_t expected = 0;
  /// Only pairs whose every tuple has been answered.
  std::vector<PairTally> resolved;
  bool finished = false;
  std::string report_json;  // set once the pipeline finished
  std::string error;        // set if the pipeline failed
};

/// Thread-safe store of live annotation sessions. With a journal path every
/// mutation is appended as one JSON line, and the constructor replays it.
class SessionStore {
 public:
  explicit SessionStore(std::string journal_path = {});
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  /// Throws InvalidArgument on a bad config.
  std::string create(SessionConfig cfg);
  bool exists(const std::string& id) const;
  std::optional<SessionConfig> config(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  /// Oldest unanswered query; waits up to `wait` for one. Throws
  /// InvalidArgument for an unknown session.
  std::optional<PendingQuery> next(const std::string& id, std::chrono::milliseconds wait = {});
  SubmitResult submit(const std::string& id, const std::string& query_id, const Verdict& v);

  /// Queues a query and blocks for its answer. A query already answered
  /// before a restart is answered from the journal. Throws SessionClosed,
  /// Timeout.
  Verdict ask(const std::string& id, const ExpertQuery& q);

  /// Closes the session and returns its transcript (JSONL).
  std::string close(const std::string& id);
  std::string transcript(const std::string& id) const;
  SessionProgress progress(const std::string& id) const;

  /// Wakes every waiter without closing sessions (they resume after a restart).
  void shutdown();

  void set_result(const std::string& id, std::string report_json);
  void set_error(const std::string& id, std::string message);

 private:
  struct Session;
  Session& get(const std::string& id);
  const Session& get(const std::string& id) const;
  void journal(const std::string& line);
  void replay(const std::string& text);
  bool expired(const Session& s) const;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::string journal_path_;
  std::ofstream journal_;
  bool shutting_down_ = false;
};

/// Expert whose answers come from a human through a session.
class HumanExpert : public Expert {
 public:
  HumanExpert(SessionStore& store, std::string session) : store_(store), session_(std::move(session)) {}
  std::string name() const override { return "human"; }

 protected:
  PairVerdict do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) override;
  TupleVerdict do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) override;

 private:
  SessionStore& store_;
  std::string session_;
};

/// Runs the configured pipeline against a HumanExpert on a background thread
/// and records the report (or the failure) in the store.
class SessionRunner {
 public:
  explicit SessionRunner(SessionStore& store) : store_(store) {}
  ~SessionRunner();
  void start(const std::string& id);
  /// Restarts pipelines for sessions recovered from the journal.
  void resume_all();
  void join_all();

 private:
  SessionStore& store_;
  std::mutex mu_;
  std::vector<std::thread> threads_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  /// Required bearer token; empty disables the check.
  std::string token;
  /// Longest accepted ?wait= for the next-query long poll.
  std::chrono::milliseconds max_wait{30000};
};

/// JSON/HTTP front end for a SessionStore.
class AnnotationServer {
 public:
  AnnotationServer(SessionStore& store, ServerOptions opt);
  ~AnnotationServer();

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Token from CORDER_ANNOTATION_TOKEN, empty if unset.
std::string annotation_token_from_env();

}  // namespace corder

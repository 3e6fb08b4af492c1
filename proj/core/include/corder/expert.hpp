#pragma once

#include <corder/graph.hpp>
#include <corder/random.hpp>

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace corder {

/// A = first named node causes the second, B = the reverse, C = no relation.
enum class Choice { Forward = 0, Backward = 1, NoEdge = 2 };

char choice_letter(Choice c);
/// Accepts A/B/C (any case). Throws InvalidArgument.
Choice choice_from_letter(char c);
std::string_view choice_name(Choice c);
/// Parses a choice name ("Forward") or letter.
Choice parse_choice(std::string_view s);
Choice flip(Choice c);

using NamedEdge = std::pair<std::string, std::string>;

struct PairVerdict {
  Choice choice = Choice::NoEdge;
  std::string rationale;
  friend bool operator==(const PairVerdict&, const PairVerdict&) = default;
};

struct TupleVerdict {
  std::vector<NamedEdge> edges;
  std::string rationale;
  friend bool operator==(const TupleVerdict&, const TupleVerdict&) = default;
};

using Verdict = std::variant<PairVerdict, TupleVerdict>;

enum class QueryKind { Pairwise, Tuple };

struct QueryNode {
  std::string name;
  std::string description;
  friend bool operator==(const QueryNode&, const QueryNode&) = default;
};

struct ExpertQuery {
  QueryKind kind = QueryKind::Pairwise;
  std::vector<QueryNode> nodes;
  std::string context;
  /// Prompt flavour: base, cot, iterative, one_hop (pairwise) or triplet.
  std::string strategy = "base";
  /// Every variable of the graph (cot lists them).
  std::vector<std::string> all_nodes;
  /// Previously oriented edges (iterative, one_hop).
  std::vector<NamedEdge> known_edges;

  /// Canonical text identifying the question: kind and node names.
  std::string fingerprint() const;
  /// Throws InvalidArgument on duplicate nodes or a bad node count.
  void validate() const;
  friend bool operator==(const ExpertQuery&, const ExpertQuery&) = default;
};

ExpertQuery make_pair_query(const VariableSet& vars, NodeId a, NodeId b, std::string context = {});
ExpertQuery make_tuple_query(const VariableSet& vars, const std::vector<NodeId>& nodes, std::string context = {});

struct TranscriptRecord {
  ExpertQuery query;
  std::string prompt;
  std::string raw_response;
  Verdict parsed;
};

/// Thread-safe append-only log of exchanges; JSONL on disk.
class Transcript {
 public:
  void append(TranscriptRecord r);
  std::vector<TranscriptRecord> records() const;
  std::size_t size() const;
  std::string to_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
};

std::string transcript_line(const TranscriptRecord& r);
TranscriptRecord parse_transcript_line(std::string_view line);
/// Throws ParseError.
std::vector<TranscriptRecord> parse_transcript(std::string_view jsonl);

/// Uniform expert protocol. Public calls are counted and optionally logged.
class Expert {
 public:
  virtual ~Expert() = default;

  PairVerdict ask_pair(const ExpertQuery& q);
  TupleVerdict ask_tuple(const ExpertQuery& q);

  /// Answered queries (not transport attempts).
  std::size_t calls() const noexcept { return calls_.load(); }
  void attach_transcript(std::shared_ptr<Transcript> t) { transcript_ = std::move(t); }

  virtual std::string name() const = 0;
  /// How many queries a pipeline may have outstanding at once.
  virtual std::size_t max_in_flight() const { return 1; }

 protected:
  virtual PairVerdict do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) = 0;
  virtual TupleVerdict do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
  std::shared_ptr<Transcript> transcript_;
};

/// Directed path a ~> b whose intermediate nodes avoid `aux`.
bool path_avoiding(const AdjacencyMatrix& g, NodeId a, NodeId b, const std::vector<bool>& aux);

/// Forward if a path a ~> b avoids aux, Backward if b ~> a does, else NoEdge.
Choice perfect_pairwise(const AdjacencyMatrix& truth, NodeId a, NodeId b, const std::vector<NodeId>& aux = {});

/// Oracle answering from the true graph. Tuple queries use the other tuple
/// members as the auxiliary set; pairwise queries use none.
class PerfectExpert : public Expert {
 public:
  explicit PerfectExpert(CausalGraph truth) : truth_(std::move(truth)) {}
  std::string name() const override { return "perfect"; }

 protected:
  PairVerdict do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) override;
  TupleVerdict do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) override;

 private:
  CausalGraph truth_;
};

struct EpsilonExpertConfig {
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  CausalGraph truth;
};

/// Bitmask over Choice values.
using ChoiceSet = unsigned;
constexpr ChoiceSet choice_bit(Choice c) { return 1u << static_cast<unsigned>(c); }

/// Draws the answer of an epsilon-expert: correct with 1-eps, each wrong
/// choice eps/2, renormalised over the choices not in `forbidden`.
Choice epsilon_choice(Choice correct, ChoiceSet forbidden, double epsilon, Rng& rng);

/// Pair positions visited when orienting a tuple whose members are given in
/// ascending index order: pairs touching later members first, e.g. for
/// (A,B,C): (C,A), (C,B), (A,B).
std::vector<std::pair<std::size_t, std::size_t>> tuple_pair_sequence(std::size_t size);

/// Sequential epsilon orientation of a tuple (ids ascending). Each choice that
/// would close a cycle with the edges chosen so far is forbidden.
std::vector<Edge> epsilon_tuple_edges(const AdjacencyMatrix& truth, const std::vector<NodeId>& nodes, double epsilon,
                                      Rng& rng);

class EpsilonExpert : public Expert {
 public:
  explicit EpsilonExpert(EpsilonExpertConfig cfg);
  std::string name() const override { return "epsilon"; }
  const EpsilonExpertConfig& config() const noexcept { return cfg_; }

 protected:
  PairVerdict do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) override;
  TupleVerdict do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) override;

 private:
  Rng rng_for(const ExpertQuery& q) const;
  EpsilonExpertConfig cfg_;
};

/// Replays verdicts keyed by query fingerprint, in recorded order per key.
class ScriptedExpert : public Expert {
 public:
  explicit ScriptedExpert(const std::vector<TranscriptRecord>& records);
  std::string name() const override { return "scripted"; }
  std::size_t remaining() const;

 protected:
  PairVerdict do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) override;
  TupleVerdict do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) override;

 private:
  TranscriptRecord next(const ExpertQuery& q);
  mutable std::mutex mu_;
  std::map<std::string, std::deque<TranscriptRecord>> queue_;
};

/// Serialized form used on the wire and in transcripts.
std::string verdict_text(const Verdict& v);

}  // namespace corder

#pragma once

#include <corder/expert.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace corder {

/// Fills a strategy template. Placeholders: {context} {nodes} {X} {Y}
/// {descriptions} {directed_edges} {X_edges} {Y_edges}.
std::string render_prompt(const ExpertQuery& q, std::string_view strategy);
std::string render_template(std::string_view tmpl, const ExpertQuery& q);

/// Last <Answer>A|B|C</Answer> in the text.
std::optional<Choice> parse_pair_answer(std::string_view text);
/// Edge list inside the last answer tags, else the last bracketed list.
/// Names must belong to `nodes`; nullopt if nothing usable is found.
std::optional<std::vector<NamedEdge>> parse_tuple_answer(std::string_view text, const std::vector<std::string>& nodes);

/// Drops edges from the end of the list until the rest is acyclic.
std::vector<NamedEdge> repair_cyclic(std::vector<NamedEdge> edges);
bool edges_acyclic(const std::vector<NamedEdge>& edges);

class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  /// Throws EndpointError.
  virtual std::string complete(const std::string& prompt) = 0;
};

struct EndpointConfig {
  std::string base_url;
  std::string api_key;
  std::string model;
  double temperature = 0.0;
  int timeout_s = 120;

  /// EXPERT_API_BASE, EXPERT_API_KEY, EXPERT_MODEL.
  static EndpointConfig from_env();
};

/// OpenAI-style POST {base}/chat/completions.
class HttpChatEndpoint : public ChatEndpoint {
 public:
  explicit HttpChatEndpoint(EndpointConfig cfg);
  std::string complete(const std::string& prompt) override;

 private:
  EndpointConfig cfg_;
};

/// Answers from recorded exchanges, matched by exact prompt text.
class ReplayEndpoint : public ChatEndpoint {
 public:
  explicit ReplayEndpoint(const std::vector<TranscriptRecord>& records);
  std::string complete(const std::string& prompt) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::size_t> next_;
};

class FunctionEndpoint : public ChatEndpoint {
 public:
  explicit FunctionEndpoint(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt) override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

struct LlmConfig {
  /// Template for pairwise queries whose own strategy is empty.
  std::string strategy = "base";
  int retries = 2;
  std::size_t max_in_flight = 4;
};

class LlmExpert : public Expert {
 public:
  LlmExpert(std::shared_ptr<ChatEndpoint> endpoint, LlmConfig cfg);
  std::string name() const override { return "llm"; }
  std::size_t max_in_flight() const override { return cfg_.max_in_flight; }

  /// Transport attempts, including parse retries.
  std::size_t requests() const noexcept { return requests_.load(); }
  /// Tuple answers that were still cyclic after a retry and got trimmed.
  std::size_t repairs() const noexcept { return repairs_.load(); }

 protected:
  PairVerdict do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) override;
  TupleVerdict do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) override;

 private:
  std::string send(const std::string& prompt);

  std::shared_ptr<ChatEndpoint> endpoint_;
  LlmConfig cfg_;
  std::counting_semaphore<1024> slots_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> repairs_{0};
};

}  // namespace corder

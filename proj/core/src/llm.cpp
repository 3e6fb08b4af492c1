#include <corder/bundled.hpp>
#include <corder/llm.hpp>

#include "json_io.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>

namespace corder {

namespace {

std::string py_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string py_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + py_quote(names[i]);
  return out + "]";
}

std::string edge_list(const std::vector<NamedEdge>& edges) {
  std::string out = "[";
  for (std::size_t i = 0; i < edges.size(); ++i)
    out += (i ? ", " : "") + ("(" + py_quote(edges[i].first) + ", " + py_quote(edges[i].second) + ")");
  return out + "]";
}

std::string lower_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string render_template(std::string_view tmpl, const ExpertQuery& q) {
  std::vector<std::string> tuple_names, descs;
  for (const auto& n : q.nodes) {
    tuple_names.push_back(n.name);
    descs.push_back(n.description.empty() ? n.name : n.description);
  }
  std::string descriptions = "[";
  for (std::size_t i = 0; i < descs.size(); ++i) descriptions += (i ? ", \"" : "\"") + descs[i] + "\"";
  descriptions += "]";

  const std::string x = q.nodes.size() > 0 ? q.nodes[0].name : "";
  const std::string y = q.nodes.size() > 1 ? q.nodes[1].name : "";
  std::vector<NamedEdge> x_edges, y_edges;
  for (const auto& e : q.known_edges) {
    if (e.first == x || e.second == x) x_edges.push_back(e);
    if (e.first == y || e.second == y) y_edges.push_back(e);
  }

  const auto& listed = q.kind == QueryKind::Tuple || q.all_nodes.empty() ? tuple_names : q.all_nodes;
  // one pass so substituted text is never rescanned for placeholders
  const std::vector<std::pair<std::string, std::string>> subs{
      {"{context}", lower_first(q.context)},
      {"{nodes}", py_list(listed)},
      {"{X}", py_quote(x)},
      {"{Y}", py_quote(y)},
      {"{descriptions}", descriptions},
      {"{directed_edges}", edge_list(q.known_edges)},
      {"{X_edges}", edge_list(x_edges)},
      {"{Y_edges}", edge_list(y_edges)},
  };
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool hit = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, val] : subs)
        if (tmpl.substr(i, key.size()) == key) {
          out += val;
          i += key.size();
          hit = true;
          break;
        }
    }
    if (!hit) out += tmpl[i++];
  }
  return out;
}

std::string render_prompt(const ExpertQuery& q, std::string_view strategy) {
  return render_template(prompt_template(strategy), q);
}

std::optional<Choice> parse_pair_answer(std::string_view text) {
  static const std::regex re(R"(<\s*answer\s*>\s*([ABCabc])\s*<\s*/\s*answer\s*>)", std::regex::icase);
  std::optional<Choice> last;
  std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it)
    last = choice_from_letter((*it)[1].str()[0]);
  return last;
}

std::optional<std::vector<NamedEdge>> parse_tuple_answer(std::string_view text, const std::vector<std::string>& nodes) {
  std::string s(text);
  // normalise typographic quotes to ASCII
  replace_all(s, "\xE2\x80\x98", "'");
  replace_all(s, "\xE2\x80\x99", "'");
  replace_all(s, "\xE2\x80\x9C", "\"");
  replace_all(s, "\xE2\x80\x9D", "\"");
  std::replace(s.begin(), s.end(), '`', '\'');

  std::string body;
  static const std::regex tag(R"(<\s*answer\s*>([\s\S]*?)<\s*/\s*answer\s*>)", std::regex::icase);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), tag); it != std::sregex_iterator(); ++it) body = (*it)[1].str();
  if (body.find('[') == std::string::npos) {
    auto close = s.rfind(']');
    if (close == std::string::npos) return std::nullopt;
    auto open = s.rfind('[', close);
    if (open == std::string::npos) return std::nullopt;
    body = s.substr(open, close - open + 1);
  }
  auto open = body.find('['), close = body.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  body = body.substr(open + 1, close - open - 1);

  auto resolve = [&](const std::string& raw) -> std::optional<std::string> {
    std::string t = raw;
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    for (const auto& n : nodes)
      if (n == t) return n;
    std::optional<std::string> found;
    for (const auto& n : nodes)
      if (lower(n) == lower(t)) {
        if (found) return std::nullopt;
        found = n;
      }
    return found;
  };

  static const std::regex tup(R"re(\(\s*(?:'([^']*)'|"([^"]*)")\s*(?:,\s*(?:'([^']*)'|"([^"]*)")\s*)?,?\s*\))re");
  std::vector<NamedEdge> edges;
  std::size_t matched = 0;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), tup); it != std::sregex_iterator(); ++it) {
    ++matched;
    const auto& m = *it;
    auto a = resolve(m[1].matched ? m[1].str() : m[2].str());
    if (!a) return std::nullopt;
    if (!m[3].matched && !m[4].matched) continue;  // isolated node
    auto b = resolve(m[3].matched ? m[3].str() : m[4].str());
    if (!b || *a == *b) return std::nullopt;
    NamedEdge e{*a, *b};
    if (std::find(edges.begin(), edges.end(), e) == edges.end()) edges.push_back(e);
  }
  if (matched == 0 && body.find_first_not_of(" \t\r\n") != std::string::npos) return std::nullopt;
  return edges;
}

bool edges_acyclic(const std::vector<NamedEdge>& edges) {
  VariableSet vars;
  for (const auto& [a, b] : edges) {
    if (!vars.contains(a)) vars.add(a);
    if (!vars.contains(b)) vars.add(b);
  }
  AdjacencyMatrix g(vars.size());
  for (const auto& [a, b] : edges) g.add_edge(vars.index(a), vars.index(b));
  return g.is_acyclic();
}

std::vector<NamedEdge> repair_cyclic(std::vector<NamedEdge> edges) {
  while (!edges.empty() && !edges_acyclic(edges)) edges.pop_back();
  return edges;
}

// --- endpoints -------------------------------------------------------------

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  if (const char* v = std::getenv("EXPERT_API_BASE")) c.base_url = v;
  if (const char* v = std::getenv("EXPERT_API_KEY")) c.api_key = v;
  if (const char* v = std::getenv("EXPERT_MODEL")) c.model = v;
  return c;
}

HttpChatEndpoint::HttpChatEndpoint(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw EndpointError("EXPERT_API_BASE is not set");
  if (cfg_.model.empty()) throw EndpointError("EXPERT_MODEL is not set");
}

std::string HttpChatEndpoint::complete(const std::string& prompt) {
  // split "scheme://host[:port]/prefix" into origin and path prefix
  std::string origin = cfg_.base_url, prefix;
  auto scheme_end = origin.find("://");
  auto path_start = origin.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start != std::string::npos) {
    prefix = origin.substr(path_start);
    origin.resize(path_start);
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  detail::json body{{"model", cfg_.model},
                    {"temperature", cfg_.temperature},
                    {"messages", detail::json::array({{{"role", "user"}, {"content", prompt}}})}};
  httplib::Client cli(origin);
  cli.set_read_timeout(cfg_.timeout_s, 0);
  cli.set_connection_timeout(30, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = cli.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw EndpointError("request to " + origin + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw EndpointError("endpoint returned HTTP " + std::to_string(res->status));
  try {
    auto j = detail::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const detail::json::exception& e) {
    throw EndpointError(std::string("malformed endpoint response: ") + e.what());
  }
}

ReplayEndpoint::ReplayEndpoint(const std::vector<TranscriptRecord>& records) {
  for (const auto& r : records) responses_[r.prompt].push_back(r.raw_response);
}

std::string ReplayEndpoint::complete(const std::string& prompt) {
  std::lock_guard lk(mu_);
  auto it = responses_.find(prompt);
  if (it == responses_.end()) throw EndpointError("no recorded response for this prompt");
  auto& idx = next_[prompt];
  // repeated prompts cycle through the recorded answers, then stick to the last
  const auto& v = it->second;
  return v[std::min(idx++, v.size() - 1)];
}

// --- expert ----------------------------------------------------------------

LlmExpert::LlmExpert(std::shared_ptr<ChatEndpoint> endpoint, LlmConfig cfg)
    : endpoint_(std::move(endpoint)), cfg_(std::move(cfg)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cfg_.max_in_flight, 1, 1024))) {
  if (!endpoint_) throw InvalidArgument("LlmExpert needs an endpoint");
  if (cfg_.retries < 0) throw InvalidArgument("retries must be >= 0");
}

std::string LlmExpert::send(const std::string& prompt) {
  slots_.acquire();
  ++requests_;
  try {
    auto r = endpoint_->complete(prompt);
    slots_.release();
    return r;
  } catch (...) {
    slots_.release();
    throw;
  }
}

PairVerdict LlmExpert::do_pair(const ExpertQuery& q, std::string& prompt, std::string& raw) {
  const auto& strategy = q.strategy.empty() ? cfg_.strategy : q.strategy;
  prompt = render_prompt(q, strategy);
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    raw = send(prompt);
    if (auto c = parse_pair_answer(raw)) return {*c, raw};
  }
  throw UnparseableAnswer("no <Answer>A/B/C</Answer> after " + std::to_string(cfg_.retries + 1) + " attempts", raw);
}

TupleVerdict LlmExpert::do_tuple(const ExpertQuery& q, std::string& prompt, std::string& raw) {
  prompt = render_prompt(q, "triplet");
  std::vector<std::string> names;
  for (const auto& n : q.nodes) names.push_back(n.name);

  auto ask = [&]() -> std::vector<NamedEdge> {
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      raw = send(prompt);
      if (auto e = parse_tuple_answer(raw, names)) return *e;
    }
    throw UnparseableAnswer("no edge list after " + std::to_string(cfg_.retries + 1) + " attempts", raw);
  };

  auto edges = ask();
  if (!edges_acyclic(edges)) {
    edges = ask();
    if (!edges_acyclic(edges)) {
      edges = repair_cyclic(std::move(edges));
      ++repairs_;
    }
  }
  return {edges, raw};
}

}  // namespace corder

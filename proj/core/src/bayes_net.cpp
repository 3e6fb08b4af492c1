#include <corder/bayes_net.hpp>
#include <corder/edge_list.hpp>
#include <corder/random.hpp>

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>
#include <charconv>
#include <cmath>
#include <sstream>

namespace corder {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string quoted(std::string_view s) {
  std::string e = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') e += '\\';
    e += ch;
  }
  return e + "\"";
}

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool parse_double(std::string_view s, double& out) {
  auto t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  if (*b == '+') ++b;
  auto r = std::from_chars(b, t.data() + t.size(), out);
  return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

std::vector<double> parse_numbers(std::string_view s) {
  std::vector<double> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) {
    double v;
    if (!parse_double(tok, v)) return {};
    out.push_back(v);
  }
  return out;
}

// Character cursor over the document with line tracking.
struct Cursor {
  std::string_view s;
  std::size_t i = 0;
  std::size_t line = 1;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  char get() {
    char c = s[i++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_blank() {
    while (!done()) {
      if (peek() == '#') {
        while (!done() && peek() != '\n') get();
      } else if (std::isspace(static_cast<unsigned char>(peek()))) {
        get();
      } else {
        break;
      }
    }
  }
  std::string rest_of_line() {
    std::string out;
    while (!done() && peek() != '\n') out += get();
    return trim(out);
  }
  std::string quoted() {
    get();  // opening quote
    std::string out;
    while (!done()) {
      char c = get();
      if (c == '\\' && !done()) {
        out += get();
      } else if (c == '"') {
        return out;
      } else {
        out += c;
      }
    }
    throw ParseError("unterminated quoted string", line);
  }
  std::string word() {
    if (!done() && peek() == '"') return quoted();
    std::string out;
    while (!done() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '{') out += get();
    return out;
  }
};

// Splits "a, "b c", d" honoring quotes.
std::vector<std::string> split_list(std::string_view s, std::size_t line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quoted) {
      if (c == '\\' && i + 1 < s.size()) {
        cur += s[++i];
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = was_quoted = true;
    } else if (c == ',') {
      auto t = was_quoted ? cur : trim(cur);
      if (t.empty()) throw ParseError("empty list item", line);
      out.push_back(t);
      cur.clear();
      was_quoted = false;
    } else if (!was_quoted) {
      cur += c;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw ParseError("text after quoted list item", line);
    }
  }
  if (quoted) throw ParseError("unterminated quote in list", line);
  auto t = was_quoted ? cur : trim(cur);
  if (!t.empty() || was_quoted) out.push_back(t);
  else if (!out.empty()) throw ParseError("trailing comma in list", line);
  return out;
}

std::string unquote_value(std::string_view v, std::size_t line) {
  auto t = trim(v);
  if (t.size() >= 2 && t.front() == '"') {
    auto items = split_list(t, line);
    if (items.size() != 1) throw ParseError("bad quoted value", line);
    return items[0];
  }
  return t;
}

struct RawNode {
  std::string name;
  std::string description;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> rows;
  std::size_t line = 0;
};

RawNode parse_node_body(Cursor& c, std::string name) {
  RawNode node;
  node.name = std::move(name);
  node.line = c.line;
  // collect segments split on ';' or newline, outside quotes, until '}'
  std::vector<std::pair<std::string, std::size_t>> segs;
  std::string cur;
  std::size_t cur_line = c.line;
  bool in_quote = false, closed = false;
  while (!c.done()) {
    char ch = c.peek();
    if (in_quote) {
      cur += c.get();
      if (ch == '\\' && !c.done()) cur += c.get();
      else if (ch == '"') in_quote = false;
      continue;
    }
    if (ch == '"') {
      in_quote = true;
      cur += c.get();
    } else if (ch == '#') {
      while (!c.done() && c.peek() != '\n') c.get();
    } else if (ch == '}') {
      c.get();
      closed = true;
      break;
    } else if (ch == ';' || ch == '\n') {
      segs.emplace_back(cur, cur_line);
      cur.clear();
      c.get();
      cur_line = c.line;
    } else {
      cur += c.get();
    }
  }
  if (!closed) throw ParseError("node '" + node.name + "' block not closed", c.line);
  segs.emplace_back(cur, cur_line);

  std::string last_key;
  std::set<std::string> seen;
  for (auto& [raw, line] : segs) {
    auto seg = trim(raw);
    if (seg.empty()) continue;
    auto colon = seg.find(':');
    bool keyed = colon != std::string::npos &&
                 std::all_of(seg.begin(), seg.begin() + static_cast<std::ptrdiff_t>(colon),
                             [](char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }) &&
                 colon > 0;
    if (!keyed) {
      auto nums = parse_numbers(seg);
      if (last_key != "cpt" || nums.empty()) throw ParseError("unexpected text '" + seg + "'", line);
      node.rows.push_back(std::move(nums));
      continue;
    }
    auto key = seg.substr(0, colon);
    auto value = seg.substr(colon + 1);
    if (!seen.insert(key).second) throw ParseError("field '" + key + "' repeated", line);
    last_key = key;
    if (key == "description") {
      node.description = unquote_value(value, line);
    } else if (key == "states") {
      node.states = split_list(value, line);
    } else if (key == "parents") {
      node.parents = split_list(value, line);
    } else if (key == "cpt") {
      if (!trim(value).empty()) {
        auto nums = parse_numbers(value);
        if (nums.empty()) throw ParseError("bad cpt row", line);
        node.rows.push_back(std::move(nums));
      }
    } else {
      throw ParseError("unknown field '" + key + "'", line);
    }
  }
  return node;
}

}  // namespace

CausalGraph BayesNet::graph() const {
  CausalGraph g(vars);
  for (NodeId v = 0; v < size(); ++v)
    for (auto p : parents[v]) g.adj.add_edge(p, v);
  return g;
}

std::size_t BayesNet::row_index(NodeId node, const std::vector<int>& assignment) const {
  std::size_t row = 0;
  for (auto p : parents[node]) row = row * cardinality(p) + static_cast<std::size_t>(assignment[p]);
  return row;
}

void BayesNet::validate() const {
  const auto n = size();
  if (parents.size() != n || states.size() != n || cpt.size() != n)
    throw ShapeMismatch("bayes net tables do not match variable count");
  for (NodeId v = 0; v < n; ++v) {
    for (auto p : parents[v])
      if (p == v) throw CyclicParents("'" + vars.name(v) + "' is its own parent");
    if (states[v].empty()) throw ShapeMismatch("'" + vars.name(v) + "' has no states");
    std::size_t rows = 1;
    for (auto p : parents[v]) rows *= cardinality(p);
    if (cpt[v].size() != rows)
      throw ShapeMismatch("'" + vars.name(v) + "' expects " + std::to_string(rows) + " cpt rows, got " +
                          std::to_string(cpt[v].size()));
    for (std::size_t r = 0; r < rows; ++r) {
      if (cpt[v][r].size() != cardinality(v))
        throw ShapeMismatch("'" + vars.name(v) + "' cpt row " + std::to_string(r) + " has wrong width");
      double sum = 0;
      for (double p : cpt[v][r]) {
        if (!(p >= 0.0 && p <= 1.0)) throw CptRowSum("'" + vars.name(v) + "' has a probability outside [0,1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw CptRowSum("'" + vars.name(v) + "' cpt row " + std::to_string(r) + " sums to " + fmt_double(sum));
    }
  }
  auto g = graph();
  if (auto cyc = find_cycle(g.adj)) {
    std::string s;
    for (auto id : *cyc) s += vars.name(id) + " ";
    throw CyclicParents("parent graph has a cycle through " + trim(s));
  }
}

BayesNet load_bn(std::string_view doc) {
  Cursor c{doc};
  BayesNet bn;
  std::vector<RawNode> raw;
  bool have_header = false;
  while (true) {
    c.skip_blank();
    if (c.done()) break;
    auto line = c.line;
    auto kw = c.word();
    if (kw == "bn") {
      if (have_header) throw ParseError("duplicate bn header", line);
      bn.name = unquote_value(c.rest_of_line(), line);
      have_header = true;
    } else if (kw == "context:") {
      bn.context = unquote_value(c.rest_of_line(), line);
    } else if (kw == "node") {
      c.skip_blank();
      auto name = c.word();
      if (name.empty()) throw ParseError("node without a name", line);
      c.skip_blank();
      if (c.done() || c.peek() != '{') throw ParseError("expected '{' after node name", c.line);
      c.get();
      raw.push_back(parse_node_body(c, name));
    } else {
      throw ParseError("unexpected '" + kw + "'", line);
    }
  }
  if (!have_header) throw ParseError("missing 'bn <name>' header", 1);

  for (auto& r : raw) {
    try {
      bn.vars.add(r.name, r.description);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), r.line);
    }
  }
  bn.parents.resize(raw.size());
  for (std::size_t v = 0; v < raw.size(); ++v) {
    if (raw[v].states.empty()) throw ParseError("node '" + raw[v].name + "' has no states", raw[v].line);
    std::set<std::string> uniq(raw[v].states.begin(), raw[v].states.end());
    if (uniq.size() != raw[v].states.size())
      throw ParseError("node '" + raw[v].name + "' repeats a state", raw[v].line);
    for (const auto& p : raw[v].parents) {
      auto id = bn.vars.find(p);
      if (!id) throw ParseError("unknown parent '" + p + "' of '" + raw[v].name + "'", raw[v].line);
      if (std::find(bn.parents[v].begin(), bn.parents[v].end(), *id) != bn.parents[v].end())
        throw ParseError("parent '" + p + "' listed twice", raw[v].line);
      bn.parents[v].push_back(*id);
    }
    bn.states.push_back(raw[v].states);
    bn.cpt.push_back(raw[v].rows);
  }
  try {
    bn.validate();
  } catch (const ShapeMismatch& e) {
    throw ParseError(e.what());
  }
  return bn;
}

std::string write_bn(const BayesNet& bn) {
  auto q = [](const std::string& s) { return quote_name(s); };
  std::ostringstream os;
  os << "bn " << q(bn.name) << "\n";
  if (!bn.context.empty()) os << "context: " << bn.context << "\n";
  for (NodeId v = 0; v < bn.size(); ++v) {
    os << "\nnode " << q(bn.vars.name(v)) << " {\n";
    if (!bn.vars.description(v).empty()) {
      const auto& d = bn.vars.description(v);
      bool plain = d.find_first_of(";\"#}") == std::string::npos;
      os << "  description: " << (plain ? d : quoted(d)) << "\n";
    }
    os << "  states: ";
    for (std::size_t s = 0; s < bn.states[v].size(); ++s) os << (s ? ", " : "") << q(bn.states[v][s]);
    os << "\n  parents: ";
    for (std::size_t p = 0; p < bn.parents[v].size(); ++p) os << (p ? ", " : "") << q(bn.vars.name(bn.parents[v][p]));
    os << "\n  cpt:\n";
    for (const auto& row : bn.cpt[v]) {
      os << "   ";
      for (double p : row) os << ' ' << fmt_double(p);
      os << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

SampleTable forward_sample(const BayesNet& bn, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("forward_sample: n must be >= 1");
  const auto order = topological_sort(bn.graph().adj);
  SampleTable t;
  t.columns = bn.vars.names();
  t.discrete = true;
  t.data.assign(bn.size(), std::vector<double>(n, 0.0));
  Rng rng(mix_seed(seed, 0x62'6e));
  std::vector<int> a(bn.size(), 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto v : order) {
      const auto& row = bn.cpt[v][bn.row_index(v, a)];
      double u = rng.uniform(), acc = 0.0;
      int s = static_cast<int>(row.size()) - 1;
      for (std::size_t k = 0; k < row.size(); ++k) {
        acc += row[k];
        if (u < acc) {
          s = static_cast<int>(k);
          break;
        }
      }
      // never land on a zero-probability trailing state through rounding
      while (s > 0 && row[static_cast<std::size_t>(s)] == 0.0) --s;
      a[v] = s;
      t.data[v][r] = s;
    }
  }
  return t;
}

// --- linear SCM ------------------------------------------------------------

double LinearScm::coefficient(NodeId from, NodeId to) const {
  auto it = coeff.find({from, to});
  return it == coeff.end() ? 0.0 : it->second;
}

void LinearScm::set_edge(NodeId from, NodeId to, double c) {
  adj.add_edge(from, to);
  coeff[{from, to}] = c;
}

LinearScm load_scm(std::string_view doc) {
  LinearScm scm;
  std::vector<std::tuple<std::string, std::string, double, std::size_t>> edges;
  std::vector<double> noise;
  bool header = false;
  std::size_t lineno = 0, pos = 0;
  while (pos <= doc.size()) {
    auto end = doc.find('\n', pos);
    if (end == std::string_view::npos) end = doc.size();
    ++lineno;
    auto line = std::string(doc.substr(pos, end - pos));
    pos = end + 1;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream is(line);
    std::string kw;
    if (!(is >> kw)) continue;
    if (kw == "scm") {
      is >> scm.name;
      header = true;
    } else if (kw == "node") {
      std::string name, noise_kw, value;
      if (!(is >> name >> noise_kw >> value) || noise_kw != "noise")
        throw ParseError("expected 'node <name> noise <std>'", lineno);
      double sd;
      if (!parse_double(value, sd) || sd < 0) throw ParseError("bad noise std", lineno);
      try {
        scm.vars.add(name);
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), lineno);
      }
      noise.push_back(sd);
    } else if (kw == "edge") {
      std::string a, arrow, b, value;
      if (!(is >> a >> arrow >> b >> value) || arrow != "->")
        throw ParseError("expected 'edge <a> -> <b> <coeff>'", lineno);
      double c;
      if (!parse_double(value, c)) throw ParseError("bad coefficient", lineno);
      edges.emplace_back(a, b, c, lineno);
    } else {
      throw ParseError("unexpected '" + kw + "'", lineno);
    }
    std::string extra;
    if (is >> extra) throw ParseError("trailing text '" + extra + "'", lineno);
  }
  if (!header) throw ParseError("missing 'scm <name>' header", 1);
  scm.adj = AdjacencyMatrix(scm.vars.size());
  scm.noise_std = noise;
  for (const auto& [a, b, c, ln] : edges) {
    auto ia = scm.vars.find(a), ib = scm.vars.find(b);
    if (!ia || !ib) throw ParseError("edge names an undeclared node", ln);
    if (*ia == *ib) throw ParseError("self-loop", ln);
    scm.set_edge(*ia, *ib, c);
  }
  if (!scm.adj.is_acyclic()) throw CyclicParents("scm '" + scm.name + "' has a directed cycle");
  return scm;
}

std::string write_scm(const LinearScm& scm) {
  std::ostringstream os;
  os << "scm " << scm.name << "\n";
  for (NodeId v = 0; v < scm.size(); ++v) os << "node " << scm.vars.name(v) << " noise " << fmt_double(scm.noise_std[v]) << "\n";
  for (auto [a, b] : scm.adj.edges())
    os << "edge " << scm.vars.name(a) << " -> " << scm.vars.name(b) << " " << fmt_double(scm.coefficient(a, b)) << "\n";
  return os.str();
}

SampleTable sample_linear_scm(const LinearScm& scm, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_linear_scm: n must be >= 1");
  const auto order = topological_sort(scm.adj);
  SampleTable t;
  t.columns = scm.vars.names();
  t.data.assign(scm.size(), std::vector<double>(n, 0.0));
  std::vector<std::vector<std::pair<NodeId, double>>> in(scm.size());
  for (auto [a, b] : scm.adj.edges()) in[b].emplace_back(a, scm.coefficient(a, b));
  Rng rng(mix_seed(seed, 0x73'63'6d));
  for (std::size_t r = 0; r < n; ++r)
    for (auto v : order) {
      double x = scm.noise_std[v] * rng.normal();
      for (auto [p, c] : in[v]) x += c * t.data[p][r];
      t.data[v][r] = x;
    }
  return t;
}

LinearScm random_linear_scm(const CausalGraph& g, std::uint64_t seed, double lo, double hi) {
  LinearScm scm;
  scm.name = "random";
  scm.vars = g.vars;
  scm.adj = AdjacencyMatrix(g.size());
  scm.noise_std.assign(g.size(), 1.0);
  Rng rng(mix_seed(seed, 0x72'73));
  for (auto [a, b] : g.adj.edges()) {
    double mag = lo + (hi - lo) * rng.uniform();
    scm.set_edge(a, b, rng.bernoulli(0.5) ? mag : -mag);
  }
  return scm;
}

// --- CSV -------------------------------------------------------------------

std::size_t SampleTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw MissingColumn("no column '" + std::string(name) + "'");
}

std::string write_csv(const SampleTable& t) {
  std::string out;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    if (c) out += ',';
    out += t.columns[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      if (c) out += ',';
      if (t.discrete)
        out += std::to_string(static_cast<long long>(t.data[c][r]));
      else
        out += fmt_double(t.data[c][r]);
    }
    out += '\n';
  }
  return out;
}

SampleTable read_csv(std::string_view text) {
  SampleTable t;
  std::size_t pos = 0, lineno = 0;
  bool all_int = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t b = 0;
    while (true) {
      auto comma = line.find(',', b);
      cells.push_back(trim(line.substr(b, comma == std::string::npos ? std::string::npos : comma - b)));
      if (comma == std::string::npos) break;
      b = comma + 1;
    }
    if (t.columns.empty()) {
      t.columns = cells;
      t.data.resize(cells.size());
      continue;
    }
    if (cells.size() != t.columns.size()) throw ParseError("row has " + std::to_string(cells.size()) + " cells", lineno);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      if (!parse_double(cells[c], v)) throw ParseError("non-numeric cell '" + cells[c] + "'", lineno);
      if (v != std::floor(v)) all_int = false;
      t.data[c].push_back(v);
    }
  }
  if (t.columns.empty()) throw ParseError("empty csv");
  t.discrete = all_int && t.n_rows() > 0;
  return t;
}

}  // namespace corder

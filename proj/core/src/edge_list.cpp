#include <corder/edge_list.hpp>

#include <fstream>
#include <sstream>

namespace corder {

namespace {

struct Line {
  std::vector<std::string> names;
  std::string op;  // "", "->", "--"
};

bool needs_quotes(std::string_view name) {
  if (name.empty()) return true;
  if (name.find_first_of(" \t\"#\\") != std::string_view::npos) return true;
  if (name.find("->") != std::string_view::npos || name.find("--") != std::string_view::npos) return true;
  return false;
}

// Splits one line into name tokens and at most one operator.
Line tokenize(std::string_view s, std::size_t lineno, bool many = false) {
  Line out;
  std::size_t i = 0;
  std::string current;
  bool have_current = false;
  auto flush = [&] {
    if (have_current) out.names.push_back(current);
    current.clear();
    have_current = false;
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '#') break;
    if (c == '"') {
      if (have_current) throw ParseError("quote inside bare name", lineno);
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          current += s[i + 1];
          i += 2;
        } else if (s[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          current += s[i++];
        }
      }
      if (!closed) throw ParseError("unterminated quoted name", lineno);
      have_current = true;
      flush();
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      // bare names may contain spaces only when quoted
      flush();
      ++i;
      continue;
    }
    if (s.substr(i, 2) == "->" || s.substr(i, 2) == "--") {
      flush();
      if (!out.op.empty()) throw ParseError("more than one edge operator", lineno);
      if (out.names.size() != 1) throw ParseError("edge operator must follow exactly one name", lineno);
      out.op = std::string(s.substr(i, 2));
      i += 2;
      continue;
    }
    current += c;
    have_current = true;
    ++i;
  }
  flush();
  if (!many && out.op.empty() && out.names.size() > 1) throw ParseError("unquoted name contains whitespace", lineno);
  if (!out.op.empty() && out.names.size() != 2) throw ParseError("edge needs a source and a target", lineno);
  return out;
}

template <typename OnLine>
void for_each_line(std::string_view text, OnLine&& on_line) {
  std::size_t lineno = 0, pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto tl = tokenize(text.substr(pos, end - pos), lineno);
    if (!tl.names.empty()) on_line(tl, lineno);
    pos = end + 1;
  }
}

struct Parsed {
  std::vector<std::string> names;
  std::vector<std::tuple<std::string, std::string, std::string, std::size_t>> edges;
};

Parsed parse_generic(std::string_view text) {
  Parsed p;
  std::set<std::string> seen;
  auto declare = [&](const std::string& n) {
    if (n.empty()) return;
    if (seen.insert(n).second) p.names.push_back(n);
  };
  for_each_line(text, [&](const Line& l, std::size_t lineno) {
    for (const auto& n : l.names) {
      if (n.empty()) throw ParseError("empty node name", lineno);
      declare(n);
    }
    if (!l.op.empty()) p.edges.emplace_back(l.names[0], l.names[1], l.op, lineno);
  });
  return p;
}

}  // namespace

std::vector<std::string> split_names(std::string_view line) {
  auto l = tokenize(line, 0, true);
  if (!l.op.empty()) throw ParseError("unexpected edge operator");
  return l.names;
}

std::string quote_name(std::string_view name) {
  if (!needs_quotes(name)) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

CausalGraph parse_edge_list(std::string_view text) {
  auto p = parse_generic(text);
  CausalGraph g{VariableSet(p.names)};
  for (const auto& [a, b, op, lineno] : p.edges) {
    if (op != "->") throw ParseError("undirected edge in a directed edge list", lineno);
    if (a == b) throw ParseError("self-loop on '" + a + "'", lineno);
    g.add_edge(a, b);
  }
  return g;
}

MixedGraph parse_mixed_edge_list(std::string_view text) {
  auto p = parse_generic(text);
  MixedGraph g{VariableSet(p.names)};
  for (const auto& [a, b, op, lineno] : p.edges) {
    if (a == b) throw ParseError("self-loop on '" + a + "'", lineno);
    auto ia = g.vars().index(a), ib = g.vars().index(b);
    if (op == "->" && g.has_directed(ia, ib)) continue;
    if (op == "--" && g.has_undirected(ia, ib)) continue;
    if (g.adjacent(ia, ib)) throw ParseError("pair " + a + ", " + b + " connected twice", lineno);
    if (op == "->")
      g.add_directed(ia, ib);
    else
      g.add_undirected(ia, ib);
  }
  return g;
}

std::string write_edge_list(const CausalGraph& g) {
  std::ostringstream os;
  for (const auto& n : g.vars.names()) os << quote_name(n) << '\n';
  for (auto [a, b] : g.adj.edges()) os << quote_name(g.vars.name(a)) << " -> " << quote_name(g.vars.name(b)) << '\n';
  return os.str();
}

std::string write_edge_list(const MixedGraph& g) {
  std::ostringstream os;
  const auto& v = g.vars();
  for (const auto& n : v.names()) os << quote_name(n) << '\n';
  for (auto [a, b] : g.directed_edges()) os << quote_name(v.name(a)) << " -> " << quote_name(v.name(b)) << '\n';
  for (auto [a, b] : g.undirected_edges()) os << quote_name(v.name(a)) << " -- " << quote_name(v.name(b)) << '\n';
  return os.str();
}

TopologicalOrder parse_order(std::string_view text) {
  std::vector<std::string> seq;
  for_each_line(text, [&](const Line& l, std::size_t lineno) {
    if (!l.op.empty() || l.names.size() != 1) throw ParseError("order lines hold a single name", lineno);
    seq.push_back(l.names[0]);
  });
  return TopologicalOrder(std::move(seq));
}

std::string write_order(const TopologicalOrder& order) {
  std::string out;
  for (const auto& n : order.sequence()) out += quote_name(n) + "\n";
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace corder

#pragma once

#include <corder/graph.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace corder {

// Edge-list text format:
//   # comment
//   Name                 declares a node
//   src -> dst           directed edge
//   src -- dst           undirected edge (mixed graphs only)
// Names containing whitespace, quotes, '#', or arrow tokens are written as
// "double quoted" with backslash escapes. Nodes appear in first-mention order.

/// Directed graph; cycles allowed. Throws ParseError (also on `--` lines).
CausalGraph parse_edge_list(std::string_view text);
MixedGraph parse_mixed_edge_list(std::string_view text);

/// Declares every node in index order, then lists the edges, so parsing the
/// output reproduces the graph exactly.
std::string write_edge_list(const CausalGraph& g);
std::string write_edge_list(const MixedGraph& g);

/// One name per line, rank ascending. Blank lines and # comments ignored.
TopologicalOrder parse_order(std::string_view text);
std::string write_order(const TopologicalOrder& order);

std::string quote_name(std::string_view name);
/// Whitespace-separated names, honouring quotes. Throws ParseError.
std::vector<std::string> split_names(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace corder

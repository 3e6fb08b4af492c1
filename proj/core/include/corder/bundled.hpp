#pragma once

#include <corder/bayes_net.hpp>
#include <corder/graph.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace corder {

/// earthquake, cancer, survey, asia, asia_m, child.
const std::vector<std::string>& bundled_graph_names();

/// Throws UnknownGraph.
CausalGraph bundled_graph(std::string_view name);
BayesNet bundled_bn(std::string_view name);
std::string bundled_context(std::string_view name);

/// Resolves a bundled name or, failing that, a path to a .bn / edge-list file.
CausalGraph load_graph_source(const std::string& name_or_path);

/// base, cot, iterative, one_hop, triplet. Throws InvalidArgument.
std::string prompt_template(std::string_view strategy);

}  // namespace corder

#include <corder/bundled.hpp>
#include <corder/edge_list.hpp>

#include "embedded_data.hpp"

#include <filesystem>

namespace corder {

namespace detail {

std::optional<std::string_view> embedded_file(std::string_view path) {
  for (std::size_t i = 0; i < kEmbeddedFileCount; ++i)
    if (path == kEmbeddedFiles[i].path) return std::string_view(kEmbeddedFiles[i].content);
  return std::nullopt;
}

}  // namespace detail

const std::vector<std::string>& bundled_graph_names() {
  static const std::vector<std::string> names{"earthquake", "cancer", "survey", "asia", "asia_m", "child"};
  return names;
}

BayesNet bundled_bn(std::string_view name) {
  auto doc = detail::embedded_file("networks/" + std::string(name) + ".bn");
  if (!doc) throw UnknownGraph("no bundled graph named '" + std::string(name) + "'");
  return load_bn(*doc);
}

CausalGraph bundled_graph(std::string_view name) {
  if (name == "asia_m") {
    // contracted from asia so the two can never drift apart
    return contract_node(bundled_graph("asia"), "either");
  }
  return bundled_bn(name).graph();
}

std::string bundled_context(std::string_view name) { return bundled_bn(name).context; }

CausalGraph load_graph_source(const std::string& src) {
  if (detail::embedded_file("networks/" + src + ".bn")) return bundled_graph(src);
  if (!std::filesystem::exists(src)) throw UnknownGraph("'" + src + "' is neither a bundled graph nor a file");
  auto text = read_file(src);
  if (std::filesystem::path(src).extension() == ".bn") return load_bn(text).graph();
  if (std::filesystem::path(src).extension() == ".scm") return load_scm(text).graph();
  return parse_edge_list(text);
}

std::string prompt_template(std::string_view strategy) {
  auto t = detail::embedded_file("prompts/" + std::string(strategy) + ".txt");
  if (!t) throw InvalidArgument("no prompt template for strategy '" + std::string(strategy) + "'");
  return std::string(*t);
}

}  // namespace corder

#pragma once

#include <corder/elicitation.hpp>

#include <optional>
#include <string>

namespace corder {

struct ReportMetrics {
  /// Absent when the report has no order (cyclic pairwise result).
  std::optional<std::size_t> dtop;
  /// D_top of the order of the pruned graph.
  std::size_t dtop_pruned = 0;
  std::size_t shd = 0;         // final_dag vs truth
  std::size_t shd_merged = 0;  // before pruning
  std::size_t cycles = 0;
  std::size_t isolated = 0;
  std::size_t total_nodes = 0;
};

/// Unranked nodes are ignored by the D_top figures. Throws UnknownNode if the
/// truth has different variables.
ReportMetrics evaluate_report(const ElicitationReport& r, const CausalGraph& truth);

/// Stable JSON rendering (2-space indent, trailing newline). Includes a
/// "metrics" object when truth is given.
std::string report_to_json(const ElicitationReport& r, const CausalGraph* truth = nullptr);

}  // namespace corder

#pragma once

#include <corder/bayes_net.hpp>
#include <corder/graph.hpp>

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace corder {

/// True iff every path between x and y is blocked by z (g must be a DAG).
bool d_separated(const AdjacencyMatrix& g, NodeId x, NodeId y, const std::vector<NodeId>& z);

/// Backdoor criterion: no member of z descends from the treatment, and z
/// d-separates treatment and target once the treatment's outgoing edges are cut.
bool is_valid_backdoor(const AdjacencyMatrix& g, NodeId treatment, NodeId target, const std::vector<NodeId>& z);
bool is_valid_backdoor(const CausalGraph& g, std::string_view treatment, std::string_view target,
                       const std::set<std::string>& z);

enum class AdjustmentSource { OrderPredecessors, MinimalBackdoor };

struct AdjustmentSet {
  std::string treatment;
  std::string target;
  std::set<std::string> members;
  AdjustmentSource source = AdjustmentSource::OrderPredecessors;
  /// Variables left out because the order does not rank them.
  std::set<std::string> unranked;
};

/// Everything ranked strictly before the treatment. Throws UnorderedNode.
/// With `vars`, the nodes the order leaves out are listed in `unranked`.
AdjustmentSet order_adjustment_set(const TopologicalOrder& order, std::string_view treatment,
                                   std::string_view target = {}, const VariableSet* vars = nullptr);

/// Parents of the treatment, greedily thinned while the set stays valid.
/// nullopt if the target is an ancestor of the treatment.
std::optional<AdjustmentSet> minimal_backdoor(const CausalGraph& g, std::string_view treatment,
                                              std::string_view target);

struct AceEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
  std::pair<double, double> levels{1.0, 0.0};
  std::string estimator = "adjustment-regression";
  std::size_t n_used = 0;
};

/// OLS of target on [1, treatment, z]; ACE = beta_treatment * (x - x_star).
/// Throws MissingColumn, SingularDesign, InvalidArgument (target or
/// treatment in z, x == x_star).
AceEstimate ace_adjusted(const SampleTable& data, std::string_view treatment, std::string_view target,
                         const std::set<std::string>& z, double x = 1.0, double x_star = 0.0);

/// Sum over directed treatment ~> target paths of coefficient products,
/// scaled by (x - x_star).
double true_ace(const LinearScm& scm, std::string_view treatment, std::string_view target, double x = 1.0,
                double x_star = 0.0);

inline double epsilon_ace(double estimate, double truth) { return estimate < truth ? truth - estimate : estimate - truth; }
inline double epsilon_ace(const AceEstimate& e, double truth) { return epsilon_ace(e.value, truth); }

/// CSV row: treatment,target,"z1 z2",value,stderr
std::string ace_csv_row(const AdjustmentSet& z, const AceEstimate& e);

}  // namespace corder

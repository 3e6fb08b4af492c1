#include <corder/effect.hpp>

#include <corder/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace corder {

bool d_separated(const AdjacencyMatrix& g, NodeId x, NodeId y, const std::vector<NodeId>& z) {
  const std::size_t n = g.size();
  if (x >= n || y >= n) throw InvalidArgument("node id out of range");
  std::vector<bool> in_z(n, false);
  for (auto v : z) in_z.at(v) = true;
  if (in_z[x] || in_z[y]) return true;
  if (x == y) return false;

  // ancestors of z, z included
  std::vector<bool> anc(n, false);
  std::vector<NodeId> stack(z.begin(), z.end());
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (anc[v]) continue;
    anc[v] = true;
    for (auto p : g.parents(v)) stack.push_back(p);
  }

  // (node, arrived-from-child)
  std::vector<std::array<bool, 2>> seen(n, {false, false});
  std::vector<std::pair<NodeId, bool>> todo{{x, true}};
  while (!todo.empty()) {
    auto [v, up] = todo.back();
    todo.pop_back();
    if (seen[v][up]) continue;
    seen[v][up] = true;
    if (v == y) return false;
    if (up) {
      if (in_z[v]) continue;
      for (auto p : g.parents(v)) todo.push_back({p, true});
      for (auto c : g.children(v)) todo.push_back({c, false});
    } else {
      if (!in_z[v])
        for (auto c : g.children(v)) todo.push_back({c, false});
      if (anc[v])
        for (auto p : g.parents(v)) todo.push_back({p, true});
    }
  }
  return true;
}

bool is_valid_backdoor(const AdjacencyMatrix& g, NodeId treatment, NodeId target, const std::vector<NodeId>& z) {
  if (treatment == target) return false;
  auto desc = descendants(g, treatment);
  for (auto v : z) {
    if (v == treatment || v == target || desc.at(v)) return false;
  }
  AdjacencyMatrix cut = g;
  for (auto c : g.children(treatment)) cut.remove_edge(treatment, c);
  return d_separated(cut, treatment, target, z);
}

bool is_valid_backdoor(const CausalGraph& g, std::string_view treatment, std::string_view target,
                       const std::set<std::string>& z) {
  std::vector<NodeId> ids;
  for (const auto& name : z) ids.push_back(g.vars.index(name));
  return is_valid_backdoor(g.adj, g.vars.index(treatment), g.vars.index(target), ids);
}

AdjustmentSet order_adjustment_set(const TopologicalOrder& order, std::string_view treatment,
                                   std::string_view target, const VariableSet* vars) {
  auto rank = order.rank(treatment);
  if (!rank) throw UnorderedNode(std::string(treatment));
  AdjustmentSet out;
  out.treatment = treatment;
  out.target = target;
  out.source = AdjustmentSource::OrderPredecessors;
  for (std::size_t i = 0; i < *rank; ++i) {
    if (order.sequence()[i] != target) out.members.insert(order.sequence()[i]);
  }
  if (vars) {
    for (const auto& name : vars->names())
      if (!order.contains(name)) out.unranked.insert(name);
  }
  return out;
}

std::optional<AdjustmentSet> minimal_backdoor(const CausalGraph& g, std::string_view treatment,
                                              std::string_view target) {
  const NodeId t = g.vars.index(treatment), y = g.vars.index(target);
  if (ancestors(g.adj, t).at(y)) return std::nullopt;
  auto z = g.adj.parents(t);
  if (!is_valid_backdoor(g.adj, t, y, z)) return std::nullopt;
  for (std::size_t i = z.size(); i-- > 0;) {
    auto trial = z;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
    if (is_valid_backdoor(g.adj, t, y, trial)) z = std::move(trial);
  }
  AdjustmentSet out;
  out.treatment = treatment;
  out.target = target;
  out.source = AdjustmentSource::MinimalBackdoor;
  for (auto v : z) out.members.insert(g.vars.name(v));
  return out;
}

AceEstimate ace_adjusted(const SampleTable& data, std::string_view treatment, std::string_view target,
                         const std::set<std::string>& z, double x, double x_star) {
  if (x == x_star) throw InvalidArgument("treatment levels must differ");
  if (z.contains(std::string(target))) throw InvalidArgument("adjustment set contains the target");
  if (z.contains(std::string(treatment))) throw InvalidArgument("adjustment set contains the treatment");

  const auto& yv = data.column(target);
  std::vector<const std::vector<double>*> cols{&data.column(treatment)};
  for (const auto& name : z) cols.push_back(&data.column(name));

  const auto n = static_cast<Eigen::Index>(data.n_rows());
  const auto p = static_cast<Eigen::Index>(cols.size() + 1);
  if (n <= p) throw SingularDesign("not enough rows for the regression");
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd Y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    X(r, 0) = 1.0;
    for (Eigen::Index c = 1; c < p; ++c) X(r, c) = (*cols[static_cast<std::size_t>(c - 1)])[static_cast<std::size_t>(r)];
    Y(r) = yv[static_cast<std::size_t>(r)];
  }

  Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p || ldlt.info() != Eigen::Success) throw SingularDesign("design matrix is rank deficient");
  Eigen::VectorXd beta = qr.solve(Y);
  Eigen::VectorXd resid = Y - X * beta;
  double sigma2 = resid.squaredNorm() / static_cast<double>(n - p);
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p)) * sigma2;

  AceEstimate e;
  e.levels = {x, x_star};
  e.n_used = static_cast<std::size_t>(n);
  e.value = beta(1) * (x - x_star);
  e.stderr_value = std::sqrt(std::max(0.0, cov(1, 1))) * std::abs(x - x_star);
  if (!std::isfinite(e.value)) throw SingularDesign("non-finite estimate");
  return e;
}

double true_ace(const LinearScm& scm, std::string_view treatment, std::string_view target, double x, double x_star) {
  const NodeId t = scm.vars.index(treatment), y = scm.vars.index(target);
  double total = 0.0;
  // depth-first walk over every directed path t ~> y
  std::vector<std::pair<NodeId, double>> stack{{t, 1.0}};
  while (!stack.empty()) {
    auto [v, w] = stack.back();
    stack.pop_back();
    if (v == y) {
      total += w;
      continue;
    }
    for (auto c : scm.adj.children(v)) stack.push_back({c, w * scm.coefficient(v, c)});
  }
  if (t == y) total = 1.0;
  return total * (x - x_star);
}

std::string ace_csv_row(const AdjustmentSet& z, const AceEstimate& e) {
  std::ostringstream os;
  os.precision(17);
  os << z.treatment << ',' << z.target << ",\"";
  bool first = true;
  for (const auto& m : z.members) {
    os << (first ? "" : " ") << m;
    first = false;
  }
  os << "\"," << e.value << ',' << e.stderr_value;
  return os.str();
}

}  // namespace corder

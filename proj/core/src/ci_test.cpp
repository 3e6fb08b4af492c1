#include <corder/discovery.hpp>

#include <corder/effect.hpp>
#include <corder/error.hpp>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace corder {

namespace {

void check_table(const SampleTable& data) {
  if (data.n_rows() == 0) throw DegenerateData("sample table is empty");
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    const auto& col = data.data[c];
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); }))
      throw DegenerateData("column '" + data.columns[c] + "' is constant");
  }
}

}  // namespace

void CiTestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (test == CiTestKind::Oracle && !oracle) throw InvalidArgument("oracle test needs a graph");
}

ChiSquaredTest::ChiSquaredTest(const SampleTable& data, double alpha)
    : vars_(data.columns), codes_(data.n_cols()), levels_(data.n_cols()), alpha_(alpha) {
  check_table(data);
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    std::map<double, int> code;
    for (double v : data.data[c]) code.emplace(v, 0);
    int next = 0;
    for (auto& [v, k] : code) k = next++;
    levels_[c] = next;
    codes_[c].reserve(data.n_rows());
    for (double v : data.data[c]) codes_[c].push_back(code[v]);
  }
}

double ChiSquaredTest::p_value(NodeId x, NodeId y, const std::vector<NodeId>& z) const {
  const std::size_t rows = codes_[x].size();
  const int rx = levels_[x], ry = levels_[y];
  std::map<std::vector<int>, std::vector<double>> strata;
  std::vector<int> key(z.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < z.size(); ++i) key[i] = codes_[z[i]][r];
    auto& table = strata[key];
    if (table.empty()) table.assign(static_cast<std::size_t>(rx * ry), 0.0);
    table[static_cast<std::size_t>(codes_[x][r] * ry + codes_[y][r])] += 1.0;
  }

  double stat = 0.0;
  double df = 0.0;
  for (const auto& [k, t] : strata) {
    std::vector<double> row(static_cast<std::size_t>(rx), 0.0), col(static_cast<std::size_t>(ry), 0.0);
    double total = 0.0;
    for (int i = 0; i < rx; ++i)
      for (int j = 0; j < ry; ++j) {
        double v = t[static_cast<std::size_t>(i * ry + j)];
        row[static_cast<std::size_t>(i)] += v;
        col[static_cast<std::size_t>(j)] += v;
        total += v;
      }
    auto nonzero = [](const std::vector<double>& v) { return std::count_if(v.begin(), v.end(), [](double d) { return d > 0; }); };
    auto nr = nonzero(row), nc = nonzero(col);
    if (nr < 2 || nc < 2) continue;
    df += static_cast<double>((nr - 1) * (nc - 1));
    for (int i = 0; i < rx; ++i)
      for (int j = 0; j < ry; ++j) {
        double e = row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)] / total;
        if (e <= 0) continue;
        double d = t[static_cast<std::size_t>(i * ry + j)] - e;
        stat += d * d / e;
      }
  }
  if (df <= 0) return 1.0;
  return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

bool ChiSquaredTest::independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const {
  return p_value(x, y, z) > alpha_;
}

FisherZTest::FisherZTest(const SampleTable& data, double alpha)
    : vars_(data.columns), rows_(data.n_rows()), alpha_(alpha) {
  check_table(data);
  const std::size_t n = data.n_cols();
  std::vector<double> mean(n, 0.0), sd(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (double v : data.data[c]) mean[c] += v;
    mean[c] /= static_cast<double>(rows_);
    for (double v : data.data[c]) sd[c] += (v - mean[c]) * (v - mean[c]);
    sd[c] = std::sqrt(sd[c]);
  }
  corr_.assign(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    corr_[a * n + a] = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) s += (data.data[a][r] - mean[a]) * (data.data[b][r] - mean[b]);
      corr_[a * n + b] = corr_[b * n + a] = s / (sd[a] * sd[b]);
    }
  }
}

double FisherZTest::partial_correlation(NodeId x, NodeId y, const std::vector<NodeId>& z) const {
  const std::size_t n = vars_.size();
  std::vector<NodeId> idx{x, y};
  idx.insert(idx.end(), z.begin(), z.end());
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      sub(i, j) = corr_[idx[static_cast<std::size_t>(i)] * n + idx[static_cast<std::size_t>(j)]];
  Eigen::MatrixXd prec = sub.completeOrthogonalDecomposition().pseudoInverse();
  double denom = std::sqrt(prec(0, 0) * prec(1, 1));
  if (!(denom > 0)) return 0.0;
  return std::clamp(-prec(0, 1) / denom, -1.0, 1.0);
}

double FisherZTest::p_value(NodeId x, NodeId y, const std::vector<NodeId>& z) const {
  const double dof = static_cast<double>(rows_) - static_cast<double>(z.size()) - 3.0;
  if (dof <= 0) return 1.0;
  double r = std::clamp(partial_correlation(x, y, z), -1.0 + 1e-15, 1.0 - 1e-15);
  double stat = std::sqrt(dof) * std::atanh(r);
  return std::erfc(std::abs(stat) / std::sqrt(2.0));
}

bool FisherZTest::independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const {
  return p_value(x, y, z) > alpha_;
}

bool OracleCiTest::independent(NodeId x, NodeId y, const std::vector<NodeId>& z) const {
  return d_separated(truth_.adj, x, y, z);
}

std::unique_ptr<CiTest> make_ci_test(const SampleTable& data, const CiTestConfig& cfg) {
  cfg.validate();
  switch (cfg.test) {
    case CiTestKind::ChiSquared: return std::make_unique<ChiSquaredTest>(data, cfg.alpha);
    case CiTestKind::FisherZ: return std::make_unique<FisherZTest>(data, cfg.alpha);
    case CiTestKind::Oracle: return std::make_unique<OracleCiTest>(*cfg.oracle);
  }
  throw InvalidArgument("unknown CI test");
}

}  // namespace corder

#include "chilasso/identify.hpp"

#include "chilasso/error.hpp"
#include "chilasso/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace chl {

void DetectionConfig::validate() const {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
    throw_invalid("rel_threshold must be in (0, 1)");
}

ActiveGroupSet detect_active(const CoefficientMatrix& codes, const GroupPartition& groups,
                             const DetectionConfig& dc) {
  dc.validate();
  const Eigen::VectorXd e = group_energies(codes, groups);
  ActiveGroupSet out;
  out.energies.assign(e.data(), e.data() + e.size());
  out.flags.assign(static_cast<std::size_t>(e.size()), false);
  const double peak = e.size() > 0 ? e.maxCoeff() : 0.0;
  if (!(peak > 0.0)) return out;
  const double threshold = dc.rel_threshold * peak;
  for (Index g = 0; g < e.size(); ++g) out.flags[static_cast<std::size_t>(g)] = e(g) >= threshold;
  return out;
}

Index hamming(const ActiveGroupSet& detected, const ActiveGroupSet& truth) {
  if (detected.flags.size() != truth.flags.size())
    throw_dimension("truth", std::to_string(truth.flags.size()) + " flags vs " +
                                 std::to_string(detected.flags.size()) + " detected");
  Index d = 0;
  for (std::size_t g = 0; g < truth.flags.size(); ++g) d += detected.flags[g] != truth.flags[g] ? 1 : 0;
  return d;
}

int knn_classify(const Eigen::VectorXd& query, const LabeledSamples& train, Index k) {
  const Index n = train.data.cols();
  if (n == 0) throw_invalid("k-NN training set is empty");
  if (static_cast<Index>(train.labels.size()) != n)
    throw_dimension("labels", "one label per training column required");
  if (query.size() != train.data.rows())
    throw_dimension("query", "length " + std::to_string(query.size()) + ", training rows " +
                                 std::to_string(train.data.rows()));
  if (k < 1 || k > n) throw_invalid("k must be in [1, training size]");

  const Eigen::VectorXd dist = (train.data.colwise() - query).colwise().squaredNorm().transpose();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist(a) < dist(b); });

  std::vector<int> nearest;
  for (Index i = 0; i < k; ++i) nearest.push_back(train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  return vote(nearest);
}

namespace {

double squared_risk(const GroupedDictionary& d, const Eigen::VectorXd& x, double lambda,
                    const SolverConfig& cfg) {
  return solve_lasso(d, x, lambda, cfg).final_objective;
}

// min_a ||x - D a|| + lambda ||a||_1 through its scaled-Lasso form
// min_{a, s > 0} ||x - D a||^2 / (2 s) + s / 2 + lambda ||a||_1, alternating in a and s.
double norm_risk(const GroupedDictionary& d, const Eigen::VectorXd& x, double lambda,
                 const SolverConfig& cfg) {
  double scale = std::max(x.norm(), 1e-12);
  double best = x.norm();
  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(d.cols(), 1);
  for (int it = 0; it < 100; ++it) {
    codes = solve_lasso(d, x, lambda * scale, cfg, &codes).coefficients;
    const double r = (x - d.atoms() * codes).norm();
    best = std::min(best, r + lambda * codes.cwiseAbs().sum());
    const double next = std::max(r, 1e-12);
    if (std::abs(next - scale) <= 1e-9 * scale) break;
    scale = next;
  }
  return best;
}

}  // namespace

RiskResult risk_classify(const Eigen::VectorXd& x, std::span<const GroupedDictionary> parts,
                         double lambda, const SolverConfig& cfg, RiskForm form) {
  if (parts.empty()) throw_invalid("risk_classify needs at least one class dictionary");
  if (!(lambda >= 0.0)) throw_invalid("lambda must be >= 0");
  RiskResult out;
  for (const auto& d : parts) {
    if (d.rows() != x.size())
      throw_dimension("x", "length " + std::to_string(x.size()) + ", dictionary rows " +
                               std::to_string(d.rows()));
    out.risks.push_back(form == RiskForm::kSquaredResidualL1 ? squared_risk(d, x, lambda, cfg)
                                                             : norm_risk(d, x, lambda, cfg));
  }
  out.label = static_cast<int>(std::min_element(out.risks.begin(), out.risks.end()) - out.risks.begin());
  return out;
}

int vote(std::span<const int> labels) {
  if (labels.empty()) throw_invalid("vote needs at least one label");
  std::map<int, Index> counts;
  for (int l : labels) ++counts[l];
  int best = counts.begin()->first;
  Index best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace chl

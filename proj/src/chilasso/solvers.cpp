#include "chilasso/solvers.hpp"

#include "chilasso/error.hpp"
#include "chilasso/prox.hpp"

#include <cmath>

namespace chl {
namespace {

// Power iteration can undershoot the top eigenvalue slightly.
constexpr double kLipschitzMargin = 1.01;

std::vector<double> scaled(const std::vector<double>& w, double s) {
  std::vector<double> out(w);
  for (double& x : out) x *= s;
  return out;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw_invalid("lambda must be >= 0");
}

Penalty uniform_groups(PenaltyKind kind, const GroupedDictionary& dict, double lambda) {
  check_lambda(lambda);
  Penalty p;
  p.kind = kind;
  p.group_weights.assign(static_cast<std::size_t>(dict.group_count()), lambda);
  return p;
}

}  // namespace

double Penalty::value(const Eigen::MatrixXd& codes, const GroupPartition& groups) const {
  double total = 0.0;
  switch (kind) {
    case PenaltyKind::kL1:
      return lambda * codes.cwiseAbs().sum();
    case PenaltyKind::kRowL2:
      return lambda * codes.rowwise().norm().sum();
    case PenaltyKind::kGroupPerSample:
      for (Index j = 0; j < codes.cols(); ++j)
        for (Index g = 0; g < groups.group_count(); ++g)
          total += group_weights[static_cast<std::size_t>(g)] *
                   codes.col(j).segment(groups[g].start, groups[g].size).norm();
      return total;
    case PenaltyKind::kGroupFrobenius:
    case PenaltyKind::kHierarchical:
      for (Index g = 0; g < groups.group_count(); ++g)
        total += group_weights[static_cast<std::size_t>(g)] *
                 codes.middleRows(groups[g].start, groups[g].size).norm();
      if (kind == PenaltyKind::kHierarchical) total += lambda * codes.cwiseAbs().sum();
      return total;
  }
  return total;
}

void Penalty::apply_prox(Eigen::MatrixXd& v, double step, const GroupPartition& groups) const {
  switch (kind) {
    case PenaltyKind::kL1:
      soft_threshold_inplace(v, step * lambda);
      break;
    case PenaltyKind::kRowL2:
      shrink_rows_inplace(v, step * lambda);
      break;
    case PenaltyKind::kGroupPerSample:
      shrink_column_blocks_inplace(v, groups, scaled(group_weights, step));
      break;
    case PenaltyKind::kGroupFrobenius:
      shrink_row_blocks_inplace(v, groups, scaled(group_weights, step));
      break;
    case PenaltyKind::kHierarchical:
      soft_threshold_inplace(v, step * lambda);
      shrink_row_blocks_inplace(v, groups, scaled(group_weights, step));
      break;
  }
}

SolveResult solve_proximal(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                           const Penalty& penalty, const SolverConfig& cfg,
                           const CoefficientMatrix* warm_start) {
  cfg.validate();
  if (samples.rows() != dict.rows())
    throw_dimension("X", std::to_string(samples.rows()) + " rows, dictionary has " +
                             std::to_string(dict.rows()));
  if (samples.cols() < 1) throw_invalid("X must have at least one column");
  if (!samples.allFinite()) throw_numeric("X has non-finite entries");
  const bool grouped = penalty.kind == PenaltyKind::kGroupPerSample ||
                       penalty.kind == PenaltyKind::kGroupFrobenius ||
                       penalty.kind == PenaltyKind::kHierarchical;
  if (grouped && static_cast<Index>(penalty.group_weights.size()) != dict.group_count())
    throw_dimension("group weights", "one weight per group required");

  const Eigen::MatrixXd& D = dict.atoms();
  const GroupPartition& groups = dict.groups();
  const Index p = dict.cols();
  const Index n = samples.cols();
  const double step = 1.0 / (kLipschitzMargin * dict.lipschitz());

  SolveResult result;
  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(p, n);
  if (warm_start != nullptr) {
    if (warm_start->rows() != p || warm_start->cols() != n)
      throw_dimension("warm start", "expected " + std::to_string(p) + "x" + std::to_string(n));
    if (!warm_start->allFinite()) throw_numeric("warm start has non-finite entries");
    codes = *warm_start;
  }

  auto objective = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& da) {
    return 0.5 * (da - samples).squaredNorm() + penalty.value(a, groups);
  };

  Eigen::MatrixXd recon = D * codes;
  double current = objective(codes, recon);
  Eigen::MatrixXd lookahead = codes;
  Eigen::MatrixXd lookahead_recon = recon;
  Eigen::MatrixXd candidate(p, n);
  Eigen::MatrixXd candidate_recon(D.rows(), n);
  double t = 1.0;
  bool momentum = false;

  auto prox_step = [&](const Eigen::MatrixXd& from, const Eigen::MatrixXd& from_recon) {
    candidate.noalias() = from - step * (D.transpose() * (from_recon - samples));
    penalty.apply_prox(candidate, step, groups);
    candidate_recon.noalias() = D * candidate;
    return objective(candidate, candidate_recon);
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    double next = prox_step(lookahead, lookahead_recon);
    if (next > current && momentum) {
      // Restart from the last accepted iterate with a plain proximal step.
      t = 1.0;
      next = prox_step(codes, recon);
    }
    if (!(next <= current)) {
      if (!std::isfinite(next)) throw_numeric("solver produced a non-finite objective");
      candidate = codes;
      candidate_recon = recon;
      next = current;
    }

    const double change = (candidate - codes).norm();
    const double rel = change / std::max(codes.norm(), 1e-12);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;

    lookahead = candidate + beta * (candidate - codes);
    lookahead_recon = candidate_recon + beta * (candidate_recon - recon);
    momentum = beta != 0.0;
    codes.swap(candidate);
    recon.swap(candidate_recon);
    current = next;
    t = t_next;

    result.iterations = it;
    if (cfg.record_trace) result.objective_trace.push_back(current);
    if (rel < cfg.rel_tol) {
      result.converged = true;
      break;
    }
  }

  result.coefficients = std::move(codes);
  result.final_objective = current;
  return result;
}

SolveResult solve_lasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                        double lambda, const SolverConfig& cfg,
                        const CoefficientMatrix* warm_start) {
  check_lambda(lambda);
  Penalty p;
  p.kind = PenaltyKind::kL1;
  p.lambda = lambda;
  return solve_proximal(dict, samples, p, cfg, warm_start);
}

SolveResult solve_group_lasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                              double lambda, const SolverConfig& cfg,
                              const CoefficientMatrix* warm_start) {
  return solve_proximal(dict, samples, uniform_groups(PenaltyKind::kGroupPerSample, dict, lambda),
                        cfg, warm_start);
}

SolveResult solve_collab_lasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                               double lambda, const SolverConfig& cfg,
                               const CoefficientMatrix* warm_start) {
  check_lambda(lambda);
  Penalty p;
  p.kind = PenaltyKind::kRowL2;
  p.lambda = lambda;
  return solve_proximal(dict, samples, p, cfg, warm_start);
}

SolveResult solve_cglasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                          double lambda, const SolverConfig& cfg,
                          const CoefficientMatrix* warm_start) {
  return solve_proximal(dict, samples, uniform_groups(PenaltyKind::kGroupFrobenius, dict, lambda),
                        cfg, warm_start);
}

SolveResult solve_chilasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                           const SolverConfig& cfg, const CoefficientMatrix* warm_start) {
  cfg.validate();
  Penalty p;
  p.kind = PenaltyKind::kHierarchical;
  p.lambda = cfg.lambda1;
  p.group_weights = group_weights(cfg, dict.groups(), samples.cols());
  return solve_proximal(dict, samples, p, cfg, warm_start);
}

}  // namespace chl

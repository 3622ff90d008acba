#pragma once

#include "chilasso/model.hpp"

#include <vector>

namespace chl {

struct SolveResult {
  CoefficientMatrix coefficients;
  int iterations = 0;
  double final_objective = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // filled when SolverConfig::record_trace
};

enum class PenaltyKind {
  kL1,              // lambda ||A||_1, columns independent
  kGroupPerSample,  // sum_j sum_G w_G ||a_j,G||_2
  kRowL2,           // lambda sum_k ||a^k||_2
  kGroupFrobenius,  // sum_G w_G ||A^G||_F
  kHierarchical,    // sum_G w_G ||A^G||_F + lambda ||A||_1
};

// Non-smooth part of the objective together with its proximal map.
struct Penalty {
  PenaltyKind kind = PenaltyKind::kL1;
  double lambda = 0.0;                // l1 weight, or row weight for kRowL2
  std::vector<double> group_weights;  // group kinds only, one per group

  double value(const Eigen::MatrixXd& codes, const GroupPartition& groups) const;
  // Replaces v by prox_{step * penalty}(v).
  void apply_prox(Eigen::MatrixXd& v, double step, const GroupPartition& groups) const;
};

// Accelerated proximal gradient on 1/2 ||X - D A||_F^2 + penalty(A) with step
// 1/L and a function-value restart that keeps the objective monotone. Stops
// when ||A_k+1 - A_k||_F / max(||A_k||_F, 1e-12) < rel_tol.
SolveResult solve_proximal(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                           const Penalty& penalty, const SolverConfig& cfg,
                           const CoefficientMatrix* warm_start = nullptr);

// Each column of `samples` is coded independently (one Lasso per column).
SolveResult solve_lasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                        double lambda, const SolverConfig& cfg,
                        const CoefficientMatrix* warm_start = nullptr);

SolveResult solve_group_lasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                              double lambda, const SolverConfig& cfg,
                              const CoefficientMatrix* warm_start = nullptr);

SolveResult solve_collab_lasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                               double lambda, const SolverConfig& cfg,
                               const CoefficientMatrix* warm_start = nullptr);

SolveResult solve_cglasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                          double lambda, const SolverConfig& cfg,
                          const CoefficientMatrix* warm_start = nullptr);

// Uses cfg.lambda1 and the group weights derived from cfg.lambda2_0.
SolveResult solve_chilasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                           const SolverConfig& cfg,
                           const CoefficientMatrix* warm_start = nullptr);

}  // namespace chl

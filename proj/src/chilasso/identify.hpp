#pragma once

#include "chilasso/model.hpp"

#include <span>
#include <vector>

namespace chl {

struct DetectionConfig {
  // A group is active when its energy >= rel_threshold * max group energy.
  double rel_threshold = 0.01;

  void validate() const;
};

ActiveGroupSet detect_active(const CoefficientMatrix& codes, const GroupPartition& groups,
                             const DetectionConfig& dc);

// Number of positions where the flags differ.
Index hamming(const ActiveGroupSet& detected, const ActiveGroupSet& truth);

struct LabeledSamples {
  Eigen::MatrixXd data;     // columns are samples
  std::vector<int> labels;  // class index per column
};

// Majority label among the k nearest columns (Euclidean); ties in distance
// keep the lower column index, ties in votes go to the smaller class index.
int knn_classify(const Eigen::VectorXd& query, const LabeledSamples& train, Index k);

enum class RiskForm {
  kSquaredResidualL1,  // min_a 1/2 ||x - D a||_2^2 + lambda ||a||_1
  kResidualNormL1,     // min_a ||x - D a||_2 + lambda ||a||_1
};

struct RiskResult {
  int label = 0;
  std::vector<double> risks;
};

// Assigns x to the class dictionary with the smallest sparse-coding risk; ties
// go to the smaller class index.
RiskResult risk_classify(const Eigen::VectorXd& x, std::span<const GroupedDictionary> parts,
                         double lambda, const SolverConfig& cfg,
                         RiskForm form = RiskForm::kSquaredResidualL1);

// Majority label, ties to the smallest label.
int vote(std::span<const int> labels);

}  // namespace chl

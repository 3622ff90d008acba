#pragma once

#include "chilasso/model.hpp"

#include <span>

namespace chl {

// Element-wise soft threshold: sign(v) * max(|v| - t, 0).
Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& v, double t);

// Block shrinkage V * max(1 - t / ||V||_F, 0).
Eigen::MatrixXd prox_group_l2(const Eigen::MatrixXd& v, double t);

// prox of t1 ||.||_1 + t2 sum_G ||.^G||_F where the groups partition the rows
// of v. Soft thresholding first, then Frobenius shrinkage of each row block.
Eigen::MatrixXd prox_hilasso(const Eigen::MatrixXd& v, double t1, double t2,
                             const GroupPartition& groups);

// In-place variants used inside the solver loop. `weights` holds one threshold
// per group.
void soft_threshold_inplace(Eigen::MatrixXd& v, double t);
void shrink_row_blocks_inplace(Eigen::MatrixXd& v, const GroupPartition& groups,
                               std::span<const double> weights);
void shrink_column_blocks_inplace(Eigen::MatrixXd& v, const GroupPartition& groups,
                                  std::span<const double> weights);
void shrink_rows_inplace(Eigen::MatrixXd& v, double t);

}  // namespace chl

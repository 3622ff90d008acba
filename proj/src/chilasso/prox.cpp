#include "chilasso/prox.hpp"

#include "chilasso/error.hpp"

#include <cmath>

namespace chl {
namespace {

void check_threshold(double t, const char* name) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw_invalid(std::string(name) + " must be >= 0");
}

template <typename Block>
void shrink_block(Block&& block, double t) {
  if (t == 0.0) return;
  const double norm = block.norm();
  if (norm <= t) {
    block.setZero();
  } else {
    block *= (1.0 - t / norm);
  }
}

}  // namespace

void soft_threshold_inplace(Eigen::MatrixXd& v, double t) {
  if (t == 0.0) return;
  double* d = v.data();
  for (Index i = 0; i < v.size(); ++i) {
    const double x = d[i];
    const double mag = std::abs(x) - t;
    d[i] = mag > 0.0 ? std::copysign(mag, x) : 0.0;
  }
}

void shrink_row_blocks_inplace(Eigen::MatrixXd& v, const GroupPartition& groups,
                               std::span<const double> weights) {
  for (Index g = 0; g < groups.group_count(); ++g)
    shrink_block(v.middleRows(groups[g].start, groups[g].size),
                 weights[static_cast<std::size_t>(g)]);
}

void shrink_column_blocks_inplace(Eigen::MatrixXd& v, const GroupPartition& groups,
                                  std::span<const double> weights) {
  for (Index j = 0; j < v.cols(); ++j)
    for (Index g = 0; g < groups.group_count(); ++g)
      shrink_block(v.col(j).segment(groups[g].start, groups[g].size),
                   weights[static_cast<std::size_t>(g)]);
}

void shrink_rows_inplace(Eigen::MatrixXd& v, double t) {
  for (Index k = 0; k < v.rows(); ++k) shrink_block(v.row(k), t);
}

Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& v, double t) {
  check_threshold(t, "t");
  Eigen::MatrixXd out = v;
  soft_threshold_inplace(out, t);
  return out;
}

Eigen::MatrixXd prox_group_l2(const Eigen::MatrixXd& v, double t) {
  check_threshold(t, "t");
  Eigen::MatrixXd out = v;
  shrink_block(out, t);
  return out;
}

Eigen::MatrixXd prox_hilasso(const Eigen::MatrixXd& v, double t1, double t2,
                             const GroupPartition& groups) {
  check_threshold(t1, "t1");
  check_threshold(t2, "t2");
  groups.check_covers(v.rows(), "V");
  Eigen::MatrixXd out = v;
  soft_threshold_inplace(out, t1);
  std::vector<double> w(static_cast<std::size_t>(groups.group_count()), t2);
  shrink_row_blocks_inplace(out, groups, w);
  return out;
}

}  // namespace chl

#include "oracles.hpp"
#include "test_util.hpp"

#include "chilasso/prox.hpp"

#include <gtest/gtest.h>

using chl::Index;

TEST(Prox, SoftThresholdExamples) {
  Eigen::MatrixXd v(1, 5);
  v << -3.0, -0.5, 0.0, 0.4, 2.0;
  Eigen::MatrixXd expected(1, 5);
  expected << -2.0, 0.0, 0.0, 0.0, 1.0;
  EXPECT_TRUE(chl::prox_l1(v, 1.0).isApprox(expected));
}

TEST(Prox, GroupShrinkageExamples) {
  Eigen::MatrixXd v(2, 1);
  v << 3.0, 4.0;
  Eigen::MatrixXd expected(2, 1);
  expected << 1.8, 2.4;
  EXPECT_TRUE(chl::prox_group_l2(v, 2.0).isApprox(expected, 1e-14));
  EXPECT_TRUE(chl::prox_group_l2(v, 5.0).isZero());
  EXPECT_TRUE(chl::prox_group_l2(v, 6.0).isZero());
}

TEST(Prox, HilassoHandWorkedExample) {
  // Groups {0,1} and {2}. Soft threshold by 1 gives (2, 0, -0.5); the first
  // block has norm 2 and shrinks by 1 - 1/2, the second has norm 0.5 <= 1.
  Eigen::MatrixXd v(3, 1);
  v << 3.0, 0.5, -1.5;
  const auto groups = chl::GroupPartition::from_sizes(std::vector<Index>{2, 1});
  Eigen::MatrixXd expected(3, 1);
  expected << 1.0, 0.0, 0.0;
  EXPECT_TRUE(chl::prox_hilasso(v, 1.0, 1.0, groups).isApprox(expected, 1e-14));
}

TEST(Prox, HilassoMatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> t(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = dim(rng);
    std::vector<Index> sizes;
    for (int left = p; left > 0;) {
      const int s = std::uniform_int_distribution<int>(1, left)(rng);
      sizes.push_back(s);
      left -= s;
    }
    const Eigen::VectorXd v = testutil::gaussian(p, 1, rng) * 2.0;
    const double t1 = t(rng), t2 = t(rng);
    const Eigen::VectorXd got =
        chl::prox_hilasso(v, t1, t2, chl::GroupPartition::from_sizes(sizes));
    const Eigen::VectorXd want = oracle::prox_sparse_group(v, t1, t2, {sizes});
    EXPECT_LE((got - want).norm(), 1e-9) << "trial " << trial;
  }
}

TEST(Prox, ColumnAndRowShrinkage) {
  Eigen::MatrixXd v(2, 2);
  v << 3.0, 0.0, 4.0, 0.1;
  const auto groups = chl::GroupPartition::uniform(1, 2);
  Eigen::MatrixXd c = v;
  const std::vector<double> w{1.0};
  chl::shrink_column_blocks_inplace(c, groups, w);
  EXPECT_NEAR(c(0, 0), 3.0 * 0.8, 1e-14);
  EXPECT_EQ(c(1, 1), 0.0);
  Eigen::MatrixXd r = v;
  chl::shrink_rows_inplace(r, 1.0);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 0), 4.0 * (1.0 - 1.0 / std::hypot(4.0, 0.1)), 1e-14);
}

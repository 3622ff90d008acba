#include "oracles.hpp"
#include "test_util.hpp"

#include "chilasso/error.hpp"
#include "chilasso/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using chl::Index;
using testutil::gaussian;
using testutil::random_dict;
using testutil::rel_gap;
using testutil::tight;

namespace {

struct Instance {
  chl::GroupedDictionary dict;
  Eigen::MatrixXd x;
};

Instance instance(std::uint64_t seed, Index n = 4) {
  std::mt19937_64 rng(seed);
  auto d = random_dict(8, {4, 4, 4}, rng);
  Eigen::MatrixXd x = gaussian(8, n, rng);
  return {std::move(d), std::move(x)};
}

}  // namespace

TEST(Solvers, LassoMatchesCoordinateDescent) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto in = instance(s);
    const auto r = chl::solve_lasso(in.dict, in.x, 0.3, tight());
    const Eigen::MatrixXd ref = oracle::lasso_cd(in.dict.atoms(), in.x, 0.3);
    oracle::Weights w;
    w.l1 = 0.3;
    const oracle::Blocks b{{4, 4, 4}};
    EXPECT_LE(rel_gap(oracle::objective(in.dict.atoms(), in.x, r.coefficients, b, w),
                      oracle::objective(in.dict.atoms(), in.x, ref, b, w)),
              1e-6);
    EXPECT_TRUE(r.converged);
  }
}

TEST(Solvers, ChilassoMatchesBlockCoordinateDescent) {
  for (std::uint64_t s = 10; s < 15; ++s) {
    const auto in = instance(s);
    auto cfg = tight();
    cfg.lambda1 = 0.2;
    cfg.lambda2_0 = 0.05;
    const auto r = chl::solve_chilasso(in.dict, in.x, cfg);
    const double wg = 0.05 * std::sqrt(16.0);
    oracle::Weights w;
    w.l1 = 0.2;
    w.frob = {wg, wg, wg};
    const oracle::Blocks b{{4, 4, 4}};
    const Eigen::MatrixXd ref = oracle::block_cd(in.dict.atoms(), in.x, b, w);
    EXPECT_LE(rel_gap(oracle::objective(in.dict.atoms(), in.x, r.coefficients, b, w),
                      oracle::objective(in.dict.atoms(), in.x, ref, b, w)),
              1e-6);
    EXPECT_NEAR(r.final_objective, oracle::objective(in.dict.atoms(), in.x, r.coefficients, b, w),
                1e-9 * r.final_objective);
  }
}

TEST(Solvers, GroupAndCollaborativeVariantsMatchOracle) {
  const auto in = instance(20);
  const oracle::Blocks b{{4, 4, 4}};
  {
    const auto r = chl::solve_group_lasso(in.dict, in.x, 0.4, tight());
    oracle::Weights w;
    w.per_sample = {0.4, 0.4, 0.4};
    EXPECT_LE(rel_gap(oracle::objective(in.dict.atoms(), in.x, r.coefficients, b, w),
                      oracle::objective(in.dict.atoms(), in.x, oracle::block_cd(in.dict.atoms(), in.x, b, w), b, w)),
              1e-6);
  }
  {
    const auto r = chl::solve_collab_lasso(in.dict, in.x, 0.4, tight());
    oracle::Weights w;
    w.row = 0.4;
    EXPECT_LE(rel_gap(oracle::objective(in.dict.atoms(), in.x, r.coefficients, b, w),
                      oracle::objective(in.dict.atoms(), in.x,
                                        oracle::block_cd(in.dict.atoms(), in.x, {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}}, w), b, w)),
              1e-6);
  }
  {
    const auto r = chl::solve_cglasso(in.dict, in.x, 0.4, tight());
    oracle::Weights w;
    w.frob = {0.4, 0.4, 0.4};
    EXPECT_LE(rel_gap(oracle::objective(in.dict.atoms(), in.x, r.coefficients, b, w),
                      oracle::objective(in.dict.atoms(), in.x, oracle::block_cd(in.dict.atoms(), in.x, b, w), b, w)),
              1e-6);
  }
}

TEST(Solvers, ObjectiveTraceIsMonotone) {
  for (std::uint64_t s = 30; s < 40; ++s) {
    const auto in = instance(s, 16);
    chl::SolverConfig cfg;
    cfg.lambda1 = 0.05;
    cfg.lambda2_0 = 0.02;
    cfg.record_trace = true;
    const auto r = chl::solve_chilasso(in.dict, in.x, cfg);
    ASSERT_FALSE(r.objective_trace.empty());
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k)
      EXPECT_LE(r.objective_trace[k], r.objective_trace[k - 1] + 1e-9);
  }
}

TEST(Solvers, WarmStartAtSolutionIsFixedPoint) {
  const auto in = instance(41, 6);
  auto cfg = tight();
  cfg.lambda1 = 0.1;
  cfg.lambda2_0 = 0.05;
  const auto r = chl::solve_chilasso(in.dict, in.x, cfg);
  chl::SolverConfig one = cfg;
  one.max_iters = 1;
  one.rel_tol = 1e-6;
  const auto again = chl::solve_chilasso(in.dict, in.x, one, &r.coefficients);
  EXPECT_LT((again.coefficients - r.coefficients).norm() / r.coefficients.norm(), 1e-6);
}

TEST(Solvers, DeterministicRunsAreBitIdentical) {
  const auto in = instance(42, 9);
  chl::SolverConfig cfg;
  cfg.lambda1 = 0.1;
  cfg.lambda2_0 = 0.03;
  const auto a = chl::solve_chilasso(in.dict, in.x, cfg);
  const auto b = chl::solve_chilasso(in.dict, in.x, cfg);
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solvers, ReductionsAgree) {
  const auto in = instance(43, 5);
  auto cfg = tight();
  // No group term: per-column Lasso.
  cfg.lambda1 = 0.25;
  cfg.lambda2_0 = 0.0;
  const auto chl0 = chl::solve_chilasso(in.dict, in.x, cfg);
  const auto lasso = chl::solve_lasso(in.dict, in.x, 0.25, tight());
  EXPECT_LE(rel_gap(chl::objective_chilasso(in.dict, in.x, chl0.coefficients, 0.25, 0.0),
                    chl::objective_chilasso(in.dict, in.x, lasso.coefficients, 0.25, 0.0)),
            1e-6);
  // No l1 term: C-GLasso with the same per-group weights.
  cfg.lambda1 = 0.0;
  cfg.lambda2_0 = 0.05;
  cfg.lambda2_scaling = chl::Lambda2Scaling::kNone;
  const auto chl1 = chl::solve_chilasso(in.dict, in.x, cfg);
  const auto cgl = chl::solve_cglasso(in.dict, in.x, 0.05, tight());
  EXPECT_LE(rel_gap(chl::objective_chilasso(in.dict, in.x, chl1.coefficients, 0.0, 0.05),
                    chl::objective_chilasso(in.dict, in.x, cgl.coefficients, 0.0, 0.05)),
            1e-6);
}

TEST(Solvers, SingletonGroupLassoEqualsLasso) {
  std::mt19937_64 rng(44);
  const auto d = random_dict(8, std::vector<Index>(12, 1), rng);
  const Eigen::MatrixXd x = gaussian(8, 3, rng);
  const auto g = chl::solve_group_lasso(d, x, 0.3, tight());
  const auto l = chl::solve_lasso(d, x, 0.3, tight());
  EXPECT_LE((g.coefficients - l.coefficients).norm(), 1e-6 * std::max(1.0, l.coefficients.norm()));
}

TEST(Solvers, IteratesStayBoundedOnLargeInputs) {
  std::mt19937_64 rng(45);
  const auto d = random_dict(8, {4, 4, 4}, rng);
  const Eigen::MatrixXd x = gaussian(8, 3, rng) * 1e6;
  chl::SolverConfig cfg;
  cfg.lambda1 = 1e-3;
  cfg.max_iters = 500;
  const auto r = chl::solve_chilasso(d, x, cfg);
  EXPECT_TRUE(r.coefficients.allFinite());
  EXPECT_LE(0.5 * (x - d.atoms() * r.coefficients).squaredNorm(), 0.5 * x.squaredNorm() * (1 + 1e-12));
}

TEST(Solvers, RejectsBadInput) {
  const auto in = instance(46);
  EXPECT_THROW(chl::solve_lasso(in.dict, Eigen::MatrixXd::Ones(7, 2), 0.1, {}), chl::Error);
  EXPECT_THROW(chl::solve_lasso(in.dict, in.x, -0.1, {}), chl::Error);
  Eigen::MatrixXd bad = in.x;
  bad(0, 0) = NAN;
  EXPECT_THROW(chl::solve_lasso(in.dict, bad, 0.1, {}), chl::Error);
  const Eigen::MatrixXd warm = Eigen::MatrixXd::Zero(5, 4);
  EXPECT_THROW(chl::solve_lasso(in.dict, in.x, 0.1, {}, &warm), chl::Error);
}

TEST(Solvers, RejectsEmptyCollection) {
  const auto in = instance(47);
  EXPECT_THROW(chl::solve_lasso(in.dict, Eigen::MatrixXd(8, 0), 0.1, {}), chl::Error);
}

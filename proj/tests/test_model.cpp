#include "test_util.hpp"

#include "chilasso/error.hpp"
#include "chilasso/gdict.hpp"
#include "chilasso/model.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

using chl::Index;
using testutil::gaussian;
using testutil::random_dict;

TEST(GroupPartition, FromSizesBuildsContiguousSpans) {
  const std::vector<Index> sizes{3, 1, 4};
  const auto g = chl::GroupPartition::from_sizes(sizes);
  ASSERT_EQ(g.group_count(), 3);
  EXPECT_EQ(g.total(), 8);
  EXPECT_EQ(g[1].start, 3);
  EXPECT_EQ(g[2].start, 4);
  EXPECT_EQ(g[2].end(), 8);
  EXPECT_EQ(g.sizes(), sizes);
  EXPECT_FALSE(g.uniform_size());
  EXPECT_TRUE(chl::GroupPartition::uniform(4, 5).uniform_size());
  EXPECT_EQ(chl::GroupPartition::singletons(6).group_count(), 6);
}

TEST(GroupPartition, RejectsEmptyAndZeroSizes) {
  EXPECT_THROW(chl::GroupPartition::from_sizes(std::vector<Index>{}), chl::Error);
  EXPECT_THROW(chl::GroupPartition::from_sizes(std::vector<Index>{2, 0}), chl::Error);
  EXPECT_THROW(chl::GroupPartition::uniform(3, 2).check_covers(7, "D"), chl::Error);
}

TEST(GroupedDictionary, RequiresUnitNormColumns) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_NO_THROW(chl::GroupedDictionary(a, chl::GroupPartition::uniform(1, 3), {"a"}));
  a(0, 0) = 2.0;
  EXPECT_THROW(chl::GroupedDictionary(a, chl::GroupPartition::uniform(1, 3), {"a"}), chl::Error);
  const auto n = chl::GroupedDictionary::normalized(a, chl::GroupPartition::uniform(1, 3), {"a"});
  EXPECT_NEAR(n.atoms().col(0).norm(), 1.0, 1e-15);
}

TEST(GroupedDictionary, RejectsZeroColumnsNonFiniteAndLabelMismatch) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  a.col(1).setZero();
  EXPECT_THROW(chl::GroupedDictionary::normalized(a, chl::GroupPartition::uniform(1, 3), {"a"}),
               chl::Error);
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(3, 3);
  b(0, 0) = std::nan("");
  EXPECT_THROW(chl::GroupedDictionary(b, chl::GroupPartition::uniform(1, 3), {"a"}), chl::Error);
  EXPECT_THROW(chl::GroupedDictionary(Eigen::MatrixXd::Identity(3, 3),
                                      chl::GroupPartition::uniform(1, 3), {"a", "b"}),
               chl::Error);
  EXPECT_THROW(chl::GroupedDictionary(Eigen::MatrixXd::Identity(3, 3),
                                      chl::GroupPartition::uniform(2, 2), {"a", "b"}),
               chl::Error);
}

TEST(GroupedDictionary, LipschitzEstimateIsSafeForSolverStep) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    const auto d = random_dict(12, {5, 7, 4}, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.atoms().transpose() * d.atoms());
    const double exact = es.eigenvalues().maxCoeff();
    EXPECT_LE(d.lipschitz(), exact * (1.0 + 1e-12));
    EXPECT_GE(1.01 * d.lipschitz(), exact);
  }
}

TEST(GroupedDictionary, SliceReturnsSubDictionary) {
  std::mt19937_64 rng(3);
  const auto d = random_dict(6, {2, 3}, rng);
  const auto s = d.slice(1);
  EXPECT_EQ(s.cols(), 3);
  EXPECT_EQ(s.label(0), "g1");
  EXPECT_EQ(s.atoms(), d.group_atoms(1));
  EXPECT_THROW(d.slice(2), chl::Error);
}

TEST(Objectives, SingleSampleWithoutL1MatchesGroupLassoValue) {
  std::mt19937_64 rng(5);
  const auto d = random_dict(8, {3, 4, 2}, rng);
  const Eigen::VectorXd x = gaussian(8, 1, rng);
  const Eigen::VectorXd a = gaussian(9, 1, rng);
  const double lambda2 = 0.37;
  double expected = 0.5 * (x - d.atoms() * a).squaredNorm();
  for (const auto& s : d.groups().spans()) expected += lambda2 * a.segment(s.start, s.size).norm();
  EXPECT_NEAR(chl::objective_chilasso(d, x, a, 0.0, lambda2), expected, 1e-12);
}

TEST(Objectives, InvariantUnderJointColumnPermutation) {
  std::mt19937_64 rng(6);
  const auto d = random_dict(8, {3, 4}, rng);
  const Eigen::MatrixXd x = gaussian(8, 5, rng);
  const Eigen::MatrixXd a = gaussian(7, 5, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 0, 4, 1, 2;
  const double f = chl::objective_chilasso(d, x, a, 0.2, 0.3);
  const double g = chl::objective_chilasso(d, x * perm, a * perm, 0.2, 0.3);
  EXPECT_NEAR(f, g, 1e-12 * f);
  EXPECT_GE(f, 0.0);
  EXPECT_TRUE(std::isfinite(f));
}

TEST(Objectives, LassoValueAndDimensionChecks) {
  std::mt19937_64 rng(7);
  const auto d = random_dict(4, {3}, rng);
  const Eigen::VectorXd x = gaussian(4, 1, rng);
  const Eigen::VectorXd a = gaussian(3, 1, rng);
  EXPECT_NEAR(chl::objective_lasso(d, x, a, 0.5),
              0.5 * (x - d.atoms() * a).squaredNorm() + 0.5 * a.cwiseAbs().sum(), 1e-12);
  EXPECT_THROW(chl::objective_lasso(d, Eigen::VectorXd::Zero(5), a, 0.5), chl::Error);
  EXPECT_THROW(chl::objective_lasso(d, x, a, -1.0), chl::Error);
  EXPECT_THROW(chl::objective_chilasso(d, gaussian(4, 2, rng), gaussian(3, 3, rng), 0.1, 0.1),
               chl::Error);
}

TEST(Objectives, GroupEnergiesPartitionFrobeniusNorm) {
  std::mt19937_64 rng(8);
  const auto groups = chl::GroupPartition::from_sizes(std::vector<Index>{2, 5, 1});
  const Eigen::MatrixXd a = gaussian(8, 6, rng);
  const Eigen::VectorXd e = chl::group_energies(a, groups);
  EXPECT_NEAR(a.squaredNorm(), e.squaredNorm(), 1e-10);
}

TEST(GroupWeights, ScaleWithGroupSizeAndSampleCount) {
  chl::SolverConfig cfg;
  cfg.lambda2_0 = 0.1;
  const auto groups = chl::GroupPartition::from_sizes(std::vector<Index>{4, 9});
  const auto w = chl::group_weights(cfg, groups, 16);
  EXPECT_NEAR(w[0], 0.1 * std::sqrt(64.0), 1e-14);
  EXPECT_NEAR(w[1], 0.1 * std::sqrt(144.0), 1e-14);
  cfg.lambda2_scaling = chl::Lambda2Scaling::kNone;
  EXPECT_EQ(chl::group_weights(cfg, groups, 16), (std::vector<double>{0.1, 0.1}));
}

TEST(SolverConfig, ValidateRejectsBadValues) {
  chl::SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lambda1 = -1.0;
  EXPECT_THROW(cfg.validate(), chl::Error);
  cfg = {};
  cfg.max_iters = 0;
  EXPECT_THROW(cfg.validate(), chl::Error);
  cfg = {};
  cfg.rel_tol = 0.0;
  EXPECT_THROW(cfg.validate(), chl::Error);
}

TEST(SampleMatrix, ValidateChecksIdsAndFiniteness) {
  auto s = chl::make_samples(Eigen::MatrixXd::Ones(3, 4));
  EXPECT_EQ(s.ids.size(), 4u);
  EXPECT_NO_THROW(s.validate("X"));
  s.ids.pop_back();
  EXPECT_THROW(s.validate("X"), chl::Error);
  auto t = chl::make_samples(Eigen::MatrixXd::Ones(3, 2));
  t.data(1, 1) = INFINITY;
  EXPECT_THROW(t.validate("X"), chl::Error);
  EXPECT_NO_THROW(chl::make_samples(Eigen::MatrixXd(3, 0)).validate("X"));
}

TEST(ActiveGroupSet, MakeAndQuery) {
  const auto s = chl::make_active_set(5, std::vector<Index>{1, 3});
  EXPECT_EQ(s.active_count(), 2);
  EXPECT_EQ(s.active_indices(), (std::vector<Index>{1, 3}));
  EXPECT_THROW(chl::make_active_set(5, std::vector<Index>{5}), chl::Error);
}

// ------------------------------------------------------------------ GDICT1

TEST(Gdict, RoundTripIsBitExact) {
  std::mt19937_64 rng(21);
  const auto d = random_dict(9, {4, 1, 6}, rng);
  const auto bytes = chl::encode_gdict(d);
  const auto back = chl::decode_gdict(bytes);
  EXPECT_TRUE(back == d);
  EXPECT_EQ(chl::encode_gdict(back), bytes);
  EXPECT_EQ(back.labels(), d.labels());
}

TEST(Gdict, FileRoundTrip) {
  std::mt19937_64 rng(22);
  const auto d = random_dict(5, {2, 2}, rng);
  const auto path = std::filesystem::temp_directory_path() / "chilasso_test_roundtrip.gdict";
  chl::save_gdict(d, path);
  EXPECT_TRUE(chl::load_gdict(path) == d);
  std::filesystem::remove(path);
  EXPECT_THROW(chl::load_gdict(path), chl::Error);
}

TEST(Gdict, RejectsCorruptInput) {
  std::mt19937_64 rng(23);
  const auto bytes = chl::encode_gdict(random_dict(4, {2, 3}, rng));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(chl::decode_gdict(bad_magic), chl::Error);
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(chl::decode_gdict(truncated), chl::Error) << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(chl::decode_gdict(trailing), chl::Error);
  auto bad_sizes = bytes;
  bad_sizes[6 + 24] = 9;  // first group size no longer sums to p
  EXPECT_THROW(chl::decode_gdict(bad_sizes), chl::Error);
}

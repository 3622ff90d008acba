#include "chilasso/dict_learn.hpp"

#include "chilasso/error.hpp"
#include "chilasso/solvers.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace chl {
namespace {

double training_objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D,
                          const Eigen::MatrixXd& A, double lambda) {
  return 0.5 * (X - D * A).squaredNorm() + lambda * A.cwiseAbs().sum();
}

// Rescales atoms to unit norm and moves the scale into the code rows so D*A is
// unchanged. Atoms that vanished get their code row cleared.
void renormalize(Eigen::MatrixXd& D, Eigen::MatrixXd& A) {
  for (Index k = 0; k < D.cols(); ++k) {
    const double n = D.col(k).norm();
    if (n > 0.0 && std::isfinite(n)) {
      D.col(k) /= n;
      A.row(k) *= n;
    } else {
      D.col(k).setZero();
      A.row(k).setZero();
    }
  }
}

// Method of optimal directions restricted to the atoms in use.
bool mod_update(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                const std::vector<Index>& used, Eigen::MatrixXd& D) {
  const Index u = static_cast<Index>(used.size());
  Eigen::MatrixXd Au(u, A.cols());
  for (Index i = 0; i < u; ++i) Au.row(i) = A.row(used[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd gram = Au * Au.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Eigen::VectorXd diag = ldlt.vectorD();
  if (diag.minCoeff() <= 1e-12 * diag.maxCoeff()) return false;
  const Eigen::MatrixXd Du = ldlt.solve(Au * X.transpose()).transpose();
  if (!Du.allFinite()) return false;
  for (Index i = 0; i < u; ++i) D.col(used[static_cast<std::size_t>(i)]) = Du.col(i);
  return true;
}

// One sweep of block coordinate descent over the used atoms, each constrained
// to the unit ball. Never increases the training objective.
void bcd_update(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                const std::vector<Index>& used, Eigen::MatrixXd& D) {
  const Eigen::MatrixXd B = X * A.transpose();
  const Eigen::MatrixXd C = A * A.transpose();
  for (Index k : used) {
    const double ckk = C(k, k);
    if (ckk <= 0.0) continue;
    Eigen::VectorXd u = D.col(k) + (B.col(k) - D * C.col(k)) / ckk;
    const double n = u.norm();
    if (n > 1.0) u /= n;
    D.col(k) = u;
  }
}

}  // namespace

GroupedDictionary learn_subdictionary(const TrainingSet& ts, const SolverConfig& cfg,
                                      std::uint64_t seed, LearnReport* report) {
  LearnReport local;
  LearnReport& rep = report != nullptr ? *report : local;
  rep = LearnReport{};

  const Eigen::MatrixXd& X = ts.samples.data;
  if (ts.atom_count < 1) throw_invalid("atom_count must be >= 1");
  if (ts.epochs < 1) throw_invalid("epochs must be >= 1");
  if (!(ts.lambda >= 0.0)) throw_invalid("lambda must be >= 0");
  if (X.cols() < 1 || X.rows() < 1) throw_invalid("training set is empty");
  if (!X.allFinite()) throw_numeric("training samples have non-finite entries");

  std::vector<Index> nonzero;
  for (Index j = 0; j < X.cols(); ++j)
    if (X.col(j).norm() > 0.0) nonzero.push_back(j);
  if (nonzero.empty()) throw_invalid("training data is all zero");
  if (X.cols() < ts.atom_count) {
    rep.warnings.push_back("class '" + ts.class_label + "': " + std::to_string(X.cols()) +
                           " samples for " + std::to_string(ts.atom_count) + " atoms");
  }

  // Seeded initialization: distinct samples while they last, then repeats.
  std::mt19937_64 rng(seed);
  std::vector<Index> pool = nonzero;
  for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  const Index m = X.rows();
  const Index p = ts.atom_count;
  Eigen::MatrixXd D(m, p);
  for (Index k = 0; k < p; ++k) {
    const Index src = k < static_cast<Index>(pool.size())
                          ? pool[static_cast<std::size_t>(k)]
                          : pool[static_cast<std::size_t>(rng() % pool.size())];
    D.col(k) = X.col(src).normalized();
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, X.cols());
  const GroupPartition single = GroupPartition::uniform(1, p);

  for (int epoch = 0; epoch < ts.epochs; ++epoch) {
    const GroupedDictionary current(D, single, {ts.class_label});
    A = solve_lasso(current, X, ts.lambda, cfg, &A).coefficients;
    const double f = training_objective(X, D, A, ts.lambda);
    rep.epoch_objectives.push_back(f);
    if (epoch + 1 == ts.epochs) break;

    std::vector<Index> used;
    std::vector<Index> dead;
    for (Index k = 0; k < p; ++k) (A.row(k).cwiseAbs().maxCoeff() > 0.0 ? used : dead).push_back(k);

    if (!used.empty()) {
      Eigen::MatrixXd D_mod = D;
      Eigen::MatrixXd A_mod = A;
      bool accepted = false;
      if (mod_update(X, A, used, D_mod)) {
        renormalize(D_mod, A_mod);
        accepted = training_objective(X, D_mod, A_mod, ts.lambda) <= f;
      }
      if (accepted) {
        D.swap(D_mod);
        A.swap(A_mod);
      } else {
        ++rep.fallback_updates;
        bcd_update(X, A, used, D);
        renormalize(D, A);
      }
      for (Index k : used)
        if (D.col(k).norm() == 0.0) dead.push_back(k);
    }

    if (!dead.empty()) {
      const Eigen::VectorXd residual = (X - D * A).colwise().norm().transpose();
      std::vector<Index> order(static_cast<std::size_t>(X.cols()));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return residual(a) > residual(b); });
      std::size_t next = 0;
      for (Index k : dead) {
        while (next < order.size() && X.col(order[next]).norm() == 0.0) ++next;
        const Index src = next < order.size() ? order[next++]
                                              : nonzero[static_cast<std::size_t>(rng() % nonzero.size())];
        D.col(k) = X.col(src).normalized();
        A.row(k).setZero();
        ++rep.reseeded_atoms;
      }
    }
  }

  return GroupedDictionary(std::move(D), single, {ts.class_label});
}

GroupedDictionary concat_dictionaries(std::span<const GroupedDictionary> parts) {
  if (parts.empty()) throw_invalid("concat_dictionaries needs at least one part");
  const Index m = parts.front().rows();
  Index p = 0;
  std::vector<Index> sizes;
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (const auto& part : parts) {
    if (part.rows() != m)
      throw_dimension("parts", "row count " + std::to_string(part.rows()) + " vs " +
                                   std::to_string(m));
    for (Index g = 0; g < part.group_count(); ++g) {
      if (!seen.insert(part.label(g)).second)
        throw_invalid("duplicate dictionary label '" + part.label(g) + "'");
      sizes.push_back(part.groups()[g].size);
      labels.push_back(part.label(g));
    }
    p += part.cols();
  }
  Eigen::MatrixXd atoms(m, p);
  Index offset = 0;
  for (const auto& part : parts) {
    atoms.middleCols(offset, part.cols()) = part.atoms();
    offset += part.cols();
  }
  return GroupedDictionary(std::move(atoms), GroupPartition::from_sizes(sizes), std::move(labels));
}

}  // namespace chl

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chl {

using Index = Eigen::Index;

// Contiguous column block [start, start + size).
struct GroupSpan {
  Index start = 0;
  Index size = 0;

  Index end() const { return start + size; }
  bool operator==(const GroupSpan&) const = default;
};

// Ordered partition of {0..p-1} into contiguous, non-empty blocks.
class GroupPartition {
 public:
  GroupPartition() = default;

  static GroupPartition from_sizes(std::span<const Index> sizes);
  static GroupPartition uniform(Index group_count, Index group_size);
  static GroupPartition singletons(Index p);

  Index group_count() const { return static_cast<Index>(spans_.size()); }
  Index total() const { return spans_.empty() ? 0 : spans_.back().end(); }
  const GroupSpan& operator[](Index g) const { return spans_[static_cast<std::size_t>(g)]; }
  const std::vector<GroupSpan>& spans() const { return spans_; }
  std::vector<Index> sizes() const;
  bool uniform_size() const;

  // Throws if the partition does not cover exactly `rows` rows.
  void check_covers(Index rows, const std::string& operand) const;

  bool operator==(const GroupPartition&) const = default;

 private:
  std::vector<GroupSpan> spans_;
};

// m x p atom matrix partitioned into G labelled sub-dictionaries. Columns are
// unit norm; the constructor rejects anything else.
class GroupedDictionary {
 public:
  GroupedDictionary(Eigen::MatrixXd atoms, GroupPartition groups,
                    std::vector<std::string> labels);

  // Normalizes every column first. Zero columns are rejected, never patched.
  static GroupedDictionary normalized(Eigen::MatrixXd atoms, GroupPartition groups,
                                      std::vector<std::string> labels);

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  Index rows() const { return atoms_.rows(); }
  Index cols() const { return atoms_.cols(); }
  Index group_count() const { return groups_.group_count(); }
  const GroupPartition& groups() const { return groups_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(Index g) const { return labels_[static_cast<std::size_t>(g)]; }

  auto group_atoms(Index g) const {
    const GroupSpan& s = groups_[g];
    return atoms_.middleCols(s.start, s.size);
  }

  // Sub-dictionary g as a standalone single-group dictionary.
  GroupedDictionary slice(Index g) const;

  // Largest eigenvalue of D^T D (squared spectral norm), estimated once by
  // power iteration at construction.
  double lipschitz() const { return lipschitz_; }

  bool operator==(const GroupedDictionary& other) const;

 private:
  Eigen::MatrixXd atoms_;
  GroupPartition groups_;
  std::vector<std::string> labels_;
  double lipschitz_ = 0.0;
};

// Power iteration on D^T D: 30 iterations, 1e-7 relative tolerance.
double estimate_lipschitz(const Eigen::MatrixXd& atoms);

// Identifies where a sample came from: (frame start sample, 0) for audio,
// (row, col) of the top-left corner for image patches.
struct SampleId {
  std::int64_t first = 0;
  std::int64_t second = 0;
  bool operator==(const SampleId&) const = default;
};

struct SampleMatrix {
  Eigen::MatrixXd data;
  std::vector<SampleId> ids;

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
  bool empty() const { return data.cols() == 0; }

  // Finite entries, one id per column. Zero columns are allowed here; solvers
  // reject them.
  void validate(const std::string& operand) const;
};

SampleMatrix make_samples(Eigen::MatrixXd data);

// p x n code matrix aligned with a dictionary's columns and a sample matrix's
// columns.
using CoefficientMatrix = Eigen::MatrixXd;

struct ActiveGroupSet {
  std::vector<bool> flags;
  std::vector<double> energies;

  Index size() const { return static_cast<Index>(flags.size()); }
  Index active_count() const;
  std::vector<Index> active_indices() const;
  bool operator==(const ActiveGroupSet&) const = default;
};

ActiveGroupSet make_active_set(Index group_count, std::span<const Index> active);

// How the base group weight lambda2_0 becomes the per-group weight used by the
// hierarchical solver.
enum class Lambda2Scaling {
  kSqrtGroupSizeTimesSamples,  // lambda2 = lambda2_0 * sqrt(|G| * n)
  kNone,                       // lambda2 = lambda2_0
};

struct SolverConfig {
  double lambda1 = 0.0;
  double lambda2_0 = 0.0;
  int max_iters = 5000;
  double rel_tol = 1e-6;
  bool deterministic = true;
  Lambda2Scaling lambda2_scaling = Lambda2Scaling::kSqrtGroupSizeTimesSamples;
  bool record_trace = false;

  void validate() const;
};

// Per-group weights lambda2_G derived from cfg for a collection of n samples.
std::vector<double> group_weights(const SolverConfig& cfg, const GroupPartition& groups,
                                  Index n);

// 1/2 ||x - D a||^2 + lambda ||a||_1
double objective_lasso(const GroupedDictionary& dict, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& a, double lambda);

// 1/2 ||X - D A||_F^2 + lambda2 sum_G ||A^G||_F + lambda1 sum_j ||a_j||_1
double objective_chilasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                          const CoefficientMatrix& codes, double lambda1, double lambda2);

// Same with one weight per group.
double objective_chilasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                          const CoefficientMatrix& codes, double lambda1,
                          std::span<const double> weights);

// Frobenius norm of each row block A^G.
Eigen::VectorXd group_energies(const CoefficientMatrix& codes, const GroupPartition& groups);

}  // namespace chl

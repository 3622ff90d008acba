#include "chilasso/model.hpp"

#include "chilasso/error.hpp"

#include <cmath>
#include <set>

namespace chl {

GroupPartition GroupPartition::from_sizes(std::span<const Index> sizes) {
  if (sizes.empty()) throw_invalid("group partition needs at least one group");
  GroupPartition out;
  Index start = 0;
  for (Index s : sizes) {
    if (s < 1) throw_invalid("group sizes must be >= 1");
    out.spans_.push_back({start, s});
    start += s;
  }
  return out;
}

GroupPartition GroupPartition::uniform(Index group_count, Index group_size) {
  std::vector<Index> sizes(static_cast<std::size_t>(group_count), group_size);
  return from_sizes(sizes);
}

GroupPartition GroupPartition::singletons(Index p) { return uniform(p, 1); }

std::vector<Index> GroupPartition::sizes() const {
  std::vector<Index> out;
  out.reserve(spans_.size());
  for (const auto& s : spans_) out.push_back(s.size);
  return out;
}

bool GroupPartition::uniform_size() const {
  for (const auto& s : spans_)
    if (s.size != spans_.front().size) return false;
  return true;
}

void GroupPartition::check_covers(Index rows, const std::string& operand) const {
  if (total() != rows) {
    throw_dimension(operand, "group partition covers " + std::to_string(total()) +
                                 " rows but matrix has " + std::to_string(rows));
  }
}

double estimate_lipschitz(const Eigen::MatrixXd& atoms) {
  const Index p = atoms.cols();
  if (p == 0) return 0.0;
  Eigen::VectorXd v(p);
  for (Index i = 0; i < p; ++i) v(i) = 1.0 + 0.01 * static_cast<double>(i) / static_cast<double>(p);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd w = atoms.transpose() * (atoms * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const bool done = it > 0 && std::abs(next - estimate) <= 1e-7 * std::abs(next);
    estimate = std::max(next, norm);
    if (done) break;
  }
  return estimate;
}

GroupedDictionary::GroupedDictionary(Eigen::MatrixXd atoms, GroupPartition groups,
                                     std::vector<std::string> labels)
    : atoms_(std::move(atoms)), groups_(std::move(groups)), labels_(std::move(labels)) {
  if (atoms_.rows() < 1) throw_invalid("dictionary needs at least one row");
  if (groups_.group_count() < 1) throw_invalid("dictionary needs at least one group");
  groups_.check_covers(atoms_.cols(), "dictionary atoms");
  if (static_cast<Index>(labels_.size()) != groups_.group_count()) {
    throw_dimension("labels", std::to_string(labels_.size()) + " labels for " +
                                  std::to_string(groups_.group_count()) + " groups");
  }
  if (!atoms_.allFinite()) throw_numeric("dictionary has non-finite entries");
  for (Index k = 0; k < atoms_.cols(); ++k) {
    const double n = atoms_.col(k).norm();
    if (std::abs(n - 1.0) > 1e-9) {
      throw_invalid("dictionary column " + std::to_string(k) + " has norm " +
                    std::to_string(n) + ", expected 1");
    }
  }
  lipschitz_ = estimate_lipschitz(atoms_);
}

GroupedDictionary GroupedDictionary::normalized(Eigen::MatrixXd atoms, GroupPartition groups,
                                                std::vector<std::string> labels) {
  for (Index k = 0; k < atoms.cols(); ++k) {
    const double n = atoms.col(k).norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw_invalid("dictionary column " + std::to_string(k) + " cannot be normalized");
    }
    atoms.col(k) /= n;
  }
  return GroupedDictionary(std::move(atoms), std::move(groups), std::move(labels));
}

GroupedDictionary GroupedDictionary::slice(Index g) const {
  if (g < 0 || g >= group_count()) throw_invalid("group index out of range");
  const Index size = groups_[g].size;
  return GroupedDictionary(Eigen::MatrixXd(group_atoms(g)),
                           GroupPartition::from_sizes(std::span<const Index>(&size, 1)),
                           {label(g)});
}

bool GroupedDictionary::operator==(const GroupedDictionary& other) const {
  return groups_ == other.groups_ && labels_ == other.labels_ &&
         atoms_.rows() == other.atoms_.rows() && atoms_.cols() == other.atoms_.cols() &&
         atoms_ == other.atoms_;
}

void SampleMatrix::validate(const std::string& operand) const {
  if (static_cast<Index>(ids.size()) != data.cols()) {
    throw_dimension(operand, std::to_string(ids.size()) + " ids for " +
                                 std::to_string(data.cols()) + " columns");
  }
  if (!data.allFinite()) throw_numeric(operand + " has non-finite entries");
}

SampleMatrix make_samples(Eigen::MatrixXd data) {
  SampleMatrix out;
  out.ids.resize(static_cast<std::size_t>(data.cols()));
  for (Index j = 0; j < data.cols(); ++j) out.ids[static_cast<std::size_t>(j)] = {j, 0};
  out.data = std::move(data);
  return out;
}

Index ActiveGroupSet::active_count() const {
  Index c = 0;
  for (bool f : flags) c += f ? 1 : 0;
  return c;
}

std::vector<Index> ActiveGroupSet::active_indices() const {
  std::vector<Index> out;
  for (std::size_t g = 0; g < flags.size(); ++g)
    if (flags[g]) out.push_back(static_cast<Index>(g));
  return out;
}

ActiveGroupSet make_active_set(Index group_count, std::span<const Index> active) {
  ActiveGroupSet out;
  out.flags.assign(static_cast<std::size_t>(group_count), false);
  out.energies.assign(static_cast<std::size_t>(group_count), 0.0);
  for (Index g : active) {
    if (g < 0 || g >= group_count) throw_invalid("active group index out of range");
    out.flags[static_cast<std::size_t>(g)] = true;
    out.energies[static_cast<std::size_t>(g)] = 1.0;
  }
  return out;
}

void SolverConfig::validate() const {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw_invalid("lambda1 must be >= 0");
  if (!(lambda2_0 >= 0.0) || !std::isfinite(lambda2_0)) throw_invalid("lambda2_0 must be >= 0");
  if (max_iters < 1) throw_invalid("max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw_invalid("rel_tol must be > 0");
}

std::vector<double> group_weights(const SolverConfig& cfg, const GroupPartition& groups,
                                  Index n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(groups.group_count()));
  for (const auto& s : groups.spans()) {
    double w = cfg.lambda2_0;
    if (cfg.lambda2_scaling == Lambda2Scaling::kSqrtGroupSizeTimesSamples) {
      w *= std::sqrt(static_cast<double>(s.size) * static_cast<double>(n));
    }
    out.push_back(w);
  }
  return out;
}

double objective_lasso(const GroupedDictionary& dict, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& a, double lambda) {
  if (x.size() != dict.rows())
    throw_dimension("x", "length " + std::to_string(x.size()) + ", dictionary has " +
                             std::to_string(dict.rows()) + " rows");
  if (a.size() != dict.cols())
    throw_dimension("a", "length " + std::to_string(a.size()) + ", dictionary has " +
                             std::to_string(dict.cols()) + " atoms");
  if (!(lambda >= 0.0)) throw_invalid("lambda must be >= 0");
  const Eigen::VectorXd r = x - dict.atoms() * a;
  return 0.5 * r.squaredNorm() + lambda * a.lpNorm<1>();
}

namespace {

void check_shapes(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                  const CoefficientMatrix& codes) {
  if (samples.rows() != dict.rows())
    throw_dimension("X", std::to_string(samples.rows()) + " rows, dictionary has " +
                             std::to_string(dict.rows()));
  if (codes.rows() != dict.cols())
    throw_dimension("A", std::to_string(codes.rows()) + " rows, dictionary has " +
                             std::to_string(dict.cols()) + " atoms");
  if (codes.cols() != samples.cols())
    throw_dimension("A", std::to_string(codes.cols()) + " columns, X has " +
                             std::to_string(samples.cols()));
}

}  // namespace

double objective_chilasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                          const CoefficientMatrix& codes, double lambda1, double lambda2) {
  std::vector<double> w(static_cast<std::size_t>(dict.group_count()), lambda2);
  if (!(lambda2 >= 0.0)) throw_invalid("lambda2 must be >= 0");
  return objective_chilasso(dict, samples, codes, lambda1, w);
}

double objective_chilasso(const GroupedDictionary& dict, const Eigen::MatrixXd& samples,
                          const CoefficientMatrix& codes, double lambda1,
                          std::span<const double> weights) {
  check_shapes(dict, samples, codes);
  if (!(lambda1 >= 0.0)) throw_invalid("lambda1 must be >= 0");
  if (static_cast<Index>(weights.size()) != dict.group_count())
    throw_dimension("weights", "one weight per group required");
  for (double w : weights)
    if (!(w >= 0.0)) throw_invalid("group weights must be >= 0");

  const double fit = 0.5 * (samples - dict.atoms() * codes).squaredNorm();
  const Eigen::VectorXd energies = group_energies(codes, dict.groups());
  double group_term = 0.0;
  for (Index g = 0; g < energies.size(); ++g)
    group_term += weights[static_cast<std::size_t>(g)] * energies(g);
  return fit + group_term + lambda1 * codes.cwiseAbs().sum();
}

Eigen::VectorXd group_energies(const CoefficientMatrix& codes, const GroupPartition& groups) {
  groups.check_covers(codes.rows(), "A");
  Eigen::VectorXd out(groups.group_count());
  for (Index g = 0; g < groups.group_count(); ++g)
    out(g) = codes.middleRows(groups[g].start, groups[g].size).norm();
  return out;
}

}  // namespace chl

#pragma once

#include "chilasso/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chl {

struct TrainingSet {
  SampleMatrix samples;
  std::string class_label;
  Index atom_count = 90;
  double lambda = 0.1;
  int epochs = 20;
};

struct LearnReport {
  std::vector<double> epoch_objectives;  // after each coding pass
  std::vector<std::string> warnings;
  Index reseeded_atoms = 0;
  Index fallback_updates = 0;  // epochs where the least-squares update was rejected
};

// Alternates batch Lasso coding with a least-squares dictionary update and
// column renormalization. Atoms start as seeded random training samples;
// unused atoms are replaced by the worst reconstructed sample.
GroupedDictionary learn_subdictionary(const TrainingSet& ts, const SolverConfig& cfg,
                                      std::uint64_t seed, LearnReport* report = nullptr);

// D = [D_1 | ... | D_G]. Every part must share the row count and carry a
// distinct label.
GroupedDictionary concat_dictionaries(std::span<const GroupedDictionary> parts);

}  // namespace chl

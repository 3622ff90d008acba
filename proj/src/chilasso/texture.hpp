#pragma once

#include "chilasso/model.hpp"

#include <string>
#include <vector>

namespace chl {

struct GrayImage {
  Eigen::MatrixXd pixels;  // H x W, nominal range [0, 255]
  std::string provenance;

  Index height() const { return pixels.rows(); }
  Index width() const { return pixels.cols(); }
};

struct PatchConfig {
  Index patch = 10;
  Index stride = 1;
  bool center = false;  // subtract each patch's mean before coding

  void validate() const;
};

// patch^2 x n_patches. Each column is a column-major vectorized window; the
// windows are visited in row-major order of their top-left corner and ids hold
// (row, col) of that corner.
SampleMatrix extract_patches(const GrayImage& img, const PatchConfig& pc);

// Removes each column's mean in place and returns the means.
Eigen::RowVectorXd remove_patch_means(SampleMatrix& patches);

struct SourcePatches {
  Index group = 0;
  Eigen::MatrixXd patches;  // D_G * A^G
};

// One reconstruction per active group; inactive groups are skipped.
std::vector<SourcePatches> separate_sources(const CoefficientMatrix& codes,
                                            const GroupedDictionary& dict,
                                            const ActiveGroupSet& active);

struct Reassembled {
  GrayImage image;
  Eigen::MatrixXi coverage;  // patches covering each pixel; 0 means uncovered
  Index uncovered = 0;
};

// Places each patch at its (row, col) id and averages overlapping values.
Reassembled reassemble(const SampleMatrix& patches, Index height, Index width,
                       const PatchConfig& pc);

// 10 log10(255^2 / MSE); +infinity for identical images.
double psnr(const GrayImage& img, const GrayImage& ref);

}  // namespace chl

#include "chilasso/texture.hpp"

#include "chilasso/error.hpp"

#include <cmath>
#include <limits>

namespace chl {

void PatchConfig::validate() const {
  if (patch < 1) throw_invalid("patch size must be >= 1");
  if (stride < 1) throw_invalid("stride must be >= 1");
}

SampleMatrix extract_patches(const GrayImage& img, const PatchConfig& pc) {
  pc.validate();
  const Index h = img.height();
  const Index w = img.width();
  if (h < pc.patch || w < pc.patch)
    throw_invalid("image " + std::to_string(h) + "x" + std::to_string(w) +
                  " is smaller than one " + std::to_string(pc.patch) + "x" +
                  std::to_string(pc.patch) + " patch");
  if (!img.pixels.allFinite()) throw_numeric("image has non-finite pixels");

  const Index rows = (h - pc.patch) / pc.stride + 1;
  const Index cols = (w - pc.patch) / pc.stride + 1;
  SampleMatrix out;
  out.data.resize(pc.patch * pc.patch, rows * cols);
  out.ids.reserve(static_cast<std::size_t>(rows * cols));
  Index j = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c, ++j) {
      const Index top = r * pc.stride;
      const Index left = c * pc.stride;
      out.data.col(j) = img.pixels.block(top, left, pc.patch, pc.patch).reshaped();
      out.ids.push_back({top, left});
    }
  }
  if (pc.center) remove_patch_means(out);
  return out;
}

Eigen::RowVectorXd remove_patch_means(SampleMatrix& patches) {
  Eigen::RowVectorXd means = patches.data.colwise().mean();
  patches.data.rowwise() -= means;
  return means;
}

std::vector<SourcePatches> separate_sources(const CoefficientMatrix& codes,
                                            const GroupedDictionary& dict,
                                            const ActiveGroupSet& active) {
  if (codes.rows() != dict.cols())
    throw_dimension("A", std::to_string(codes.rows()) + " rows, dictionary has " +
                             std::to_string(dict.cols()) + " atoms");
  if (active.size() != dict.group_count())
    throw_dimension("active", std::to_string(active.size()) + " flags for " +
                                  std::to_string(dict.group_count()) + " groups");
  std::vector<SourcePatches> out;
  for (Index g = 0; g < dict.group_count(); ++g) {
    if (!active.flags[static_cast<std::size_t>(g)]) continue;
    const GroupSpan& s = dict.groups()[g];
    out.push_back({g, dict.group_atoms(g) * codes.middleRows(s.start, s.size)});
  }
  return out;
}

Reassembled reassemble(const SampleMatrix& patches, Index height, Index width,
                       const PatchConfig& pc) {
  pc.validate();
  if (patches.rows() != pc.patch * pc.patch)
    throw_dimension("patches", std::to_string(patches.rows()) + " rows, expected " +
                                   std::to_string(pc.patch * pc.patch));
  if (static_cast<Index>(patches.ids.size()) != patches.cols())
    throw_dimension("positions", "one position per patch required");

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(height, width);
  Reassembled out;
  out.coverage = Eigen::MatrixXi::Zero(height, width);
  for (Index j = 0; j < patches.cols(); ++j) {
    const auto& id = patches.ids[static_cast<std::size_t>(j)];
    if (id.first < 0 || id.second < 0 || id.first + pc.patch > height ||
        id.second + pc.patch > width)
      throw_invalid("patch position (" + std::to_string(id.first) + ", " +
                    std::to_string(id.second) + ") is out of bounds");
    sum.block(id.first, id.second, pc.patch, pc.patch) +=
        patches.data.col(j).reshaped(pc.patch, pc.patch);
    out.coverage.block(id.first, id.second, pc.patch, pc.patch).array() += 1;
  }
  out.image.pixels = Eigen::MatrixXd::Zero(height, width);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      const int k = out.coverage(r, c);
      if (k > 0) {
        out.image.pixels(r, c) = sum(r, c) / k;
      } else {
        ++out.uncovered;
      }
    }
  }
  out.image.provenance = "reassembled";
  return out;
}

double psnr(const GrayImage& img, const GrayImage& ref) {
  if (img.height() != ref.height() || img.width() != ref.width())
    throw_dimension("img", std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                               " vs reference " + std::to_string(ref.height()) + "x" +
                               std::to_string(ref.width()));
  if (img.pixels.size() == 0) throw_invalid("PSNR of an empty image");
  const double mse = (img.pixels - ref.pixels).squaredNorm() / static_cast<double>(img.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace chl

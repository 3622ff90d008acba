#pragma once

#include "chilasso/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace chl {

struct AudioSignal {
  std::vector<double> samples;  // nominally in [-1, 1]
  double sample_rate = 16000.0;

  void validate() const;
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WindowKind { kHann, kHamming, kRectangular };

struct FeatureConfig {
  Index frame_len = 512;
  double overlap = 0.75;
  WindowKind window = WindowKind::kHann;
  // Emphasis slope of E(f) = 1 + alpha f; unset means 2 / sample_rate.
  std::optional<double> emphasis_alpha;
  Index n_coeffs = 60;
  double voiced_energy_frac = 0.1;

  void validate() const;
  Index hop() const;
  double alpha_for(double sample_rate) const;
};

// Periodic tapering window of length n.
std::vector<double> make_window(WindowKind kind, Index n);

// frame_len x n_frames, each column a windowed frame. Frame j starts at
// sample j * hop; n_frames = floor((L - frame_len) / hop) + 1.
Eigen::MatrixXd frame_signal(const AudioSignal& sig, const FeatureConfig& fc);

// |DFT| of the frame over bins 0..frame_len/2, each bin k multiplied by
// 1 + alpha * k * fs / frame_len.
Eigen::VectorXd emphasized_magnitude(std::span<const double> frame, const FeatureConfig& fc,
                                     double sample_rate);

// Orthonormal DCT-II.
Eigen::VectorXd dct2_orthonormal(const Eigen::VectorXd& x);

// First n_coeffs orthonormal DCT-II coefficients of the emphasized magnitude.
Eigen::VectorXd spectral_feature(std::span<const double> frame, const FeatureConfig& fc,
                                 double sample_rate);

// Indices of frames whose energy is at least voiced_energy_frac times the
// loudest frame. A recording with no energy selects nothing.
std::vector<Index> select_voiced(const Eigen::MatrixXd& frames, const FeatureConfig& fc);

// frame -> voiced selection -> spectral feature. Columns follow frame order;
// ids carry each frame's start sample.
SampleMatrix extract_features(const AudioSignal& sig, const FeatureConfig& fc);

// Same without voiced selection: one column per frame.
SampleMatrix extract_all_features(const AudioSignal& sig, const FeatureConfig& fc);

// Windowed-sinc resampling to `target_rate`.
AudioSignal resample(const AudioSignal& sig, double target_rate);

}  // namespace chl

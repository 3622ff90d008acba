#pragma once

#include "chilasso/audio.hpp"
#include "chilasso/model.hpp"
#include "chilasso/texture.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace chl {

struct SynthSpec {
  std::uint64_t seed = 0;
  Index m = 32;
  Index groups = 8;
  Index group_size = 16;
  Index active_groups = 2;
  Index atoms_per_group = 3;
  double snr_db = 30.0;  // +infinity means noiseless
  Index n = 64;

  void validate() const;
  static constexpr double kNoiseless = std::numeric_limits<double>::infinity();
};

struct GroupedSparseProblem {
  GroupedDictionary dict;
  SampleMatrix samples;
  ActiveGroupSet truth;
  CoefficientMatrix codes;  // generating coefficients
  Eigen::MatrixXd clean;    // D * codes before noise
};

// Random Gaussian unit-norm dictionary, the same active groups for every
// sample, per-sample random supports inside them with N(0, 1) values, and
// white Gaussian noise scaled to snr_db against the empirical signal energy.
GroupedSparseProblem gen_grouped_sparse(const SynthSpec& spec);

// Same generator over a caller-supplied dictionary (spec.m, groups and
// group_size are taken from it).
GroupedSparseProblem gen_grouped_sparse(const SynthSpec& spec, const GroupedDictionary& dict);

using Envelope = std::function<double(double hz)>;

// Sum of Lorentzian resonances plus a floor: a smooth low-order rational
// spectral envelope.
struct FormantEnvelope {
  std::vector<double> centers;
  std::vector<double> bandwidths;
  std::vector<double> gains;
  double floor = 0.02;

  double operator()(double hz) const;
};

// Distinct, seeded envelope for synthetic class `index`.
FormantEnvelope class_envelope(int index, std::uint64_t seed);

// Phases used by gen_harmonic for `count` partials.
std::vector<double> harmonic_phases(std::uint64_t seed, Index count);

// sum_k E(k f0) cos(2 pi k f0 t / fs + phi_k) over all partials below fs/2.
AudioSignal gen_harmonic(double f0, const Envelope& envelope, double duration, double fs,
                         std::uint64_t seed);

// A run of harmonic notes sharing one envelope; each note's f0 is drawn
// uniformly from [f0_low, f0_high].
AudioSignal gen_note_sequence(const Envelope& envelope, double f0_low, double f0_high,
                              double note_seconds, double duration, double fs,
                              std::uint64_t seed);

enum class TextureKind { kOrientedSine, kChecker, kNoiseBand };

struct TextureParams {
  double angle_deg = 0.0;
  double period = 8.0;       // pixels
  double contrast = 50.0;    // amplitude around the mean
  double mean = 128.0;
  double noise = 0.0;        // std of additive white noise
  double band_low = 0.08;    // noise band, cycles per pixel
  double band_high = 0.16;
  double angle_spread_deg = 20.0;
  int components = 24;
  // Low-frequency random field (any orientation, 0.005-0.03 cycles per pixel)
  // added on top of the pattern; shared in kind by every class.
  double smooth_amplitude = 0.0;
};

TextureKind parse_texture_kind(const std::string& name);
std::string texture_kind_name(TextureKind kind);

// Seeded stationary texture, clamped to [0, 255].
GrayImage gen_texture(TextureKind kind, const TextureParams& params, Index height, Index width,
                      std::uint64_t seed);

}  // namespace chl

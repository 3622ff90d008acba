#include "chilasso/synth.hpp"

#include "chilasso/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace chl {

void SynthSpec::validate() const {
  if (m < 1 || groups < 1 || group_size < 1 || n < 1) throw_invalid("synthetic dimensions must be >= 1");
  if (active_groups < 0 || active_groups > groups) throw_invalid("active_groups must be in [0, G]");
  if (atoms_per_group < 1 || atoms_per_group > group_size)
    throw_invalid("atoms_per_group must be in [1, group_size]");
  if (std::isnan(snr_db)) throw_invalid("snr_db is NaN");
}

GroupedSparseProblem gen_grouped_sparse(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd atoms(spec.m, spec.groups * spec.group_size);
  for (Index j = 0; j < atoms.cols(); ++j)
    for (Index i = 0; i < atoms.rows(); ++i) atoms(i, j) = normal(rng);
  std::vector<std::string> labels;
  for (Index g = 0; g < spec.groups; ++g) labels.push_back("class" + std::to_string(g));
  auto dict = GroupedDictionary::normalized(std::move(atoms),
                                            GroupPartition::uniform(spec.groups, spec.group_size),
                                            std::move(labels));
  return gen_grouped_sparse(spec, dict);
}

GroupedSparseProblem gen_grouped_sparse(const SynthSpec& spec_in, const GroupedDictionary& dict) {
  SynthSpec spec = spec_in;
  spec.m = dict.rows();
  spec.groups = dict.group_count();
  spec.group_size = dict.groups().sizes().front();
  for (Index s : dict.groups().sizes()) spec.group_size = std::min(spec.group_size, s);
  spec.validate();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Index> order(static_cast<std::size_t>(spec.groups));
  for (Index g = 0; g < spec.groups; ++g) order[static_cast<std::size_t>(g)] = g;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> active(order.begin(), order.begin() + spec.active_groups);
  std::sort(active.begin(), active.end());

  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(dict.cols(), spec.n);
  for (Index j = 0; j < spec.n; ++j) {
    for (Index g : active) {
      const GroupSpan& s = dict.groups()[g];
      std::vector<Index> slots(static_cast<std::size_t>(s.size));
      for (Index i = 0; i < s.size; ++i) slots[static_cast<std::size_t>(i)] = i;
      std::shuffle(slots.begin(), slots.end(), rng);
      for (Index i = 0; i < spec.atoms_per_group; ++i) {
        double v = normal(rng);
        if (v == 0.0) v = 1.0;
        codes(s.start + slots[static_cast<std::size_t>(i)], j) = v;
      }
    }
  }

  Eigen::MatrixXd clean = dict.atoms() * codes;
  Eigen::MatrixXd noisy = clean;
  if (std::isfinite(spec.snr_db)) {
    const double power = clean.squaredNorm() / static_cast<double>(clean.size());
    const double sigma = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));
    for (Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += sigma * normal(rng);
  }

  ActiveGroupSet truth = make_active_set(spec.groups, active);
  const Eigen::VectorXd energies = group_energies(codes, dict.groups());
  truth.energies.assign(energies.data(), energies.data() + energies.size());

  return GroupedSparseProblem{dict, make_samples(std::move(noisy)), std::move(truth),
                              std::move(codes), std::move(clean)};
}

double FormantEnvelope::operator()(double hz) const {
  double v = floor;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double z = (hz - centers[i]) / bandwidths[i];
    v += gains[i] / (1.0 + z * z);
  }
  return v;
}

FormantEnvelope class_envelope(int index, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919u + static_cast<std::uint64_t>(index) * 104729u + 17u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FormantEnvelope env;
  const double bands[3][2] = {{200.0, 900.0}, {900.0, 2600.0}, {2600.0, 5500.0}};
  for (const auto& band : bands) {
    env.centers.push_back(band[0] + (band[1] - band[0]) * unit(rng));
    env.bandwidths.push_back(60.0 + 240.0 * unit(rng));
    env.gains.push_back(0.3 + 0.7 * unit(rng));
  }
  return env;
}

std::vector<double> harmonic_phases(std::uint64_t seed, Index count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& p : out) p = phase(rng);
  return out;
}

AudioSignal gen_harmonic(double f0, const Envelope& envelope, double duration, double fs,
                         std::uint64_t seed) {
  if (!(f0 > 0.0)) throw_invalid("f0 must be > 0");
  if (!(fs > 0.0)) throw_invalid("fs must be > 0");
  if (!(duration > 0.0)) throw_invalid("duration must be > 0");
  Index partials = 0;
  while (static_cast<double>(partials + 1) * f0 < fs / 2.0) ++partials;
  if (partials == 0) throw_invalid("f0 is above the Nyquist frequency");

  const auto phases = harmonic_phases(seed, partials);
  std::vector<double> amps(static_cast<std::size_t>(partials));
  for (Index k = 1; k <= partials; ++k)
    amps[static_cast<std::size_t>(k - 1)] = envelope(static_cast<double>(k) * f0);

  AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.assign(static_cast<std::size_t>(std::llround(duration * fs)), 0.0);
  const double w = 2.0 * std::numbers::pi * f0 / fs;
  for (Index k = 1; k <= partials; ++k) {
    const double a = amps[static_cast<std::size_t>(k - 1)];
    if (a == 0.0) continue;
    const double phi = phases[static_cast<std::size_t>(k - 1)];
    for (std::size_t t = 0; t < sig.samples.size(); ++t)
      sig.samples[t] += a * std::cos(w * static_cast<double>(k) * static_cast<double>(t) + phi);
  }
  return sig;
}

AudioSignal gen_note_sequence(const Envelope& envelope, double f0_low, double f0_high,
                              double note_seconds, double duration, double fs,
                              std::uint64_t seed) {
  if (!(f0_low > 0.0 && f0_high >= f0_low)) throw_invalid("invalid f0 range");
  if (!(note_seconds > 0.0 && duration > 0.0)) throw_invalid("durations must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick(f0_low, f0_high);
  const auto total = static_cast<std::size_t>(std::llround(duration * fs));
  const auto note_len = static_cast<std::size_t>(std::llround(note_seconds * fs));
  const auto fade = std::min<std::size_t>(note_len / 4, static_cast<std::size_t>(0.01 * fs));

  AudioSignal out;
  out.sample_rate = fs;
  out.samples.reserve(total);
  while (out.samples.size() < total) {
    const double f0 = pick(rng);
    AudioSignal note = gen_harmonic(f0, envelope, note_seconds, fs, rng());
    double rms = 0.0;
    for (double s : note.samples) rms += s * s;
    rms = std::sqrt(rms / static_cast<double>(std::max<std::size_t>(note.samples.size(), 1)));
    const double gain = rms > 0.0 ? 0.1 / rms : 0.0;
    for (std::size_t t = 0; t < note.samples.size() && out.samples.size() < total; ++t) {
      double ramp = 1.0;
      if (fade > 0 && t < fade) ramp = static_cast<double>(t) / static_cast<double>(fade);
      if (fade > 0 && note.samples.size() - t <= fade)
        ramp = static_cast<double>(note.samples.size() - t - 1) / static_cast<double>(fade);
      out.samples.push_back(gain * ramp * note.samples[t]);
    }
  }
  return out;
}

TextureKind parse_texture_kind(const std::string& name) {
  if (name == "oriented-sine") return TextureKind::kOrientedSine;
  if (name == "checker") return TextureKind::kChecker;
  if (name == "noise-band") return TextureKind::kNoiseBand;
  throw_invalid("unknown texture kind '" + name + "'");
}

std::string texture_kind_name(TextureKind kind) {
  switch (kind) {
    case TextureKind::kOrientedSine: return "oriented-sine";
    case TextureKind::kChecker: return "checker";
    case TextureKind::kNoiseBand: return "noise-band";
  }
  return "unknown";
}

GrayImage gen_texture(TextureKind kind, const TextureParams& params, Index height, Index width,
                      std::uint64_t seed) {
  if (height < 1 || width < 1) throw_invalid("texture dimensions must be >= 1");
  if (!(params.period > 0.0)) throw_invalid("texture period must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double theta = params.angle_deg * std::numbers::pi / 180.0;

  GrayImage img;
  img.pixels.resize(height, width);
  img.provenance = "synthetic:" + texture_kind_name(kind) + ":seed=" + std::to_string(seed);

  switch (kind) {
    case TextureKind::kOrientedSine: {
      // At 0 degrees the phase depends on the row only, so each row is constant.
      const double phase = two_pi * unit(rng);
      for (Index r = 0; r < height; ++r)
        for (Index c = 0; c < width; ++c) {
          const double u = static_cast<double>(r) * std::cos(theta) + static_cast<double>(c) * std::sin(theta);
          img.pixels(r, c) = params.mean + params.contrast * std::sin(two_pi * u / params.period + phase);
        }
      break;
    }
    case TextureKind::kChecker: {
      const double offset_r = params.period * 2.0 * unit(rng);
      const double offset_c = params.period * 2.0 * unit(rng);
      for (Index r = 0; r < height; ++r)
        for (Index c = 0; c < width; ++c) {
          const double y = static_cast<double>(r) * std::cos(theta) - static_cast<double>(c) * std::sin(theta);
          const double x = static_cast<double>(r) * std::sin(theta) + static_cast<double>(c) * std::cos(theta);
          const auto cell = static_cast<long long>(std::floor((y + offset_r) / params.period)) +
                            static_cast<long long>(std::floor((x + offset_c) / params.period));
          img.pixels(r, c) = params.mean + (cell % 2 == 0 ? params.contrast : -params.contrast);
        }
      break;
    }
    case TextureKind::kNoiseBand: {
      const int count = std::max(params.components, 1);
      std::vector<double> fr, fc, ph, amp;
      const double spread = params.angle_spread_deg * std::numbers::pi / 180.0;
      for (int i = 0; i < count; ++i) {
        const double f = params.band_low + (params.band_high - params.band_low) * unit(rng);
        const double a = theta + spread * (2.0 * unit(rng) - 1.0);
        fr.push_back(f * std::cos(a));
        fc.push_back(f * std::sin(a));
        ph.push_back(two_pi * unit(rng));
        amp.push_back(0.5 + unit(rng));
      }
      double power = 0.0;
      for (double a : amp) power += 0.5 * a * a;
      const double gain = params.contrast / std::sqrt(power) / std::sqrt(2.0);
      for (Index r = 0; r < height; ++r)
        for (Index c = 0; c < width; ++c) {
          double v = 0.0;
          for (int i = 0; i < count; ++i)
            v += amp[static_cast<std::size_t>(i)] *
                 std::cos(two_pi * (fr[static_cast<std::size_t>(i)] * static_cast<double>(r) +
                                    fc[static_cast<std::size_t>(i)] * static_cast<double>(c)) +
                          ph[static_cast<std::size_t>(i)]);
          img.pixels(r, c) = params.mean + gain * v;
        }
      break;
    }
  }

  if (params.smooth_amplitude > 0.0) {
    constexpr int kWaves = 8;
    std::vector<double> fr, fc, ph;
    for (int i = 0; i < kWaves; ++i) {
      const double f = 0.005 + 0.025 * unit(rng);
      const double a = std::numbers::pi * unit(rng);
      fr.push_back(f * std::cos(a));
      fc.push_back(f * std::sin(a));
      ph.push_back(two_pi * unit(rng));
    }
    const double gain = params.smooth_amplitude * std::sqrt(2.0 / kWaves);
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c) {
        double v = 0.0;
        for (int i = 0; i < kWaves; ++i)
          v += std::cos(two_pi * (fr[static_cast<std::size_t>(i)] * static_cast<double>(r) +
                                  fc[static_cast<std::size_t>(i)] * static_cast<double>(c)) +
                        ph[static_cast<std::size_t>(i)]);
        img.pixels(r, c) += gain * v;
      }
  }

  if (params.noise > 0.0)
    for (Index i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] += params.noise * normal(rng);
  img.pixels = img.pixels.cwiseMax(0.0).cwiseMin(255.0);
  return img;
}

}  // namespace chl

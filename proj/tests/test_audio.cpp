#include "oracles.hpp"

#include "chilasso/audio.hpp"
#include "chilasso/error.hpp"
#include "chilasso/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using chl::Index;

namespace {

chl::AudioSignal noise(Index len, std::uint64_t seed, double fs = 16000.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.1);
  chl::AudioSignal s{std::vector<double>(static_cast<std::size_t>(len)), fs};
  for (double& v : s.samples) v = n(rng);
  return s;
}

}  // namespace

TEST(Audio, PeriodicHannValues) {
  const auto w = chl::make_window(chl::WindowKind::kHann, 4);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_NEAR(w[0], 0.0, 1e-15);
  EXPECT_NEAR(w[1], 0.5, 1e-15);
  EXPECT_NEAR(w[2], 1.0, 1e-15);
  EXPECT_NEAR(w[3], 0.5, 1e-15);
  const auto r = chl::make_window(chl::WindowKind::kRectangular, 3);
  EXPECT_EQ(r, (std::vector<double>{1.0, 1.0, 1.0}));
  const auto h = chl::make_window(chl::WindowKind::kHamming, 4);
  EXPECT_NEAR(h[0], 0.08, 1e-12);
}

TEST(Audio, FrameCountAndPlacement) {
  chl::FeatureConfig fc;
  fc.window = chl::WindowKind::kRectangular;
  EXPECT_EQ(fc.hop(), 128);
  auto sig = noise(512 + 128 * 5 + 17, 1);
  const auto frames = chl::frame_signal(sig, fc);
  EXPECT_EQ(frames.cols(), 6);
  EXPECT_EQ(frames(0, 2), sig.samples[256]);
  EXPECT_THROW(chl::frame_signal(noise(100, 2), fc), chl::Error);
}

TEST(Audio, EmphasizedMagnitudeMatchesDirectDft) {
  chl::FeatureConfig fc;
  fc.frame_len = 64;
  fc.n_coeffs = 33;
  const auto sig = noise(64, 3);
  const Eigen::VectorXd got = chl::emphasized_magnitude(sig.samples, fc, 16000.0);
  const Eigen::VectorXd dft = oracle::dft_magnitude(sig.samples);
  ASSERT_EQ(got.size(), 33);
  for (Index k = 0; k < got.size(); ++k) {
    const double e = 1.0 + (2.0 / 16000.0) * static_cast<double>(k) * 16000.0 / 64.0;
    EXPECT_NEAR(got(k), dft(k) * e, 1e-10);
  }
}

TEST(Audio, DctMatchesDefinitionAndPreservesNorm) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Eigen::VectorXd x(257);
  for (Index i = 0; i < x.size(); ++i) x(i) = n(rng);
  const Eigen::VectorXd got = chl::dct2_orthonormal(x);
  EXPECT_LE((got - oracle::dct2(x)).norm(), 1e-9);
  EXPECT_NEAR(got.norm(), x.norm(), 1e-9);
}

TEST(Audio, FeaturesArePositivelyHomogeneousAndDeterministic) {
  chl::FeatureConfig fc;
  auto sig = noise(8000, 5);
  const auto a = chl::extract_all_features(sig, fc);
  for (double& v : sig.samples) v *= 3.0;
  const auto b = chl::extract_all_features(sig, fc);
  EXPECT_LE((b.data - 3.0 * a.data).norm(), 1e-10 * b.data.norm());
  EXPECT_EQ(chl::extract_all_features(sig, fc).data, b.data);
  EXPECT_EQ(a.rows(), 60);
}

TEST(Audio, VoicedSelectionDropsQuietFrames) {
  chl::FeatureConfig fc;
  auto sig = noise(512 * 8, 6);
  for (std::size_t t = 2048; t < sig.samples.size(); ++t) sig.samples[t] *= 1e-3;
  const auto all = chl::extract_all_features(sig, fc);
  const auto voiced = chl::extract_features(sig, fc);
  EXPECT_LT(voiced.cols(), all.cols());
  EXPECT_GT(voiced.cols(), 0);
  for (const auto& id : voiced.ids) EXPECT_LT(id.first, 2048);
  chl::AudioSignal silent{std::vector<double>(4096, 0.0), 16000.0};
  EXPECT_EQ(chl::extract_features(silent, fc).cols(), 0);
}

TEST(Audio, ResamplePreservesLowFrequencyTone) {
  chl::AudioSignal s{std::vector<double>(44100), 44100.0};
  for (std::size_t t = 0; t < s.samples.size(); ++t)
    s.samples[t] = std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(t) / 44100.0);
  const auto r = chl::resample(s, 16000.0);
  EXPECT_EQ(r.sample_rate, 16000.0);
  EXPECT_NEAR(static_cast<double>(r.samples.size()), 16000.0, 1.0);
  double err = 0.0;
  for (std::size_t t = 200; t + 200 < r.samples.size(); ++t)
    err = std::max(err, std::abs(r.samples[t] - std::sin(2.0 * std::numbers::pi * 440.0 *
                                                          static_cast<double>(t) / 16000.0)));
  EXPECT_LT(err, 1e-2);
}

TEST(Audio, ConfigValidation) {
  chl::FeatureConfig fc;
  fc.overlap = 1.0;
  EXPECT_THROW(fc.validate(), chl::Error);
  fc = {};
  fc.n_coeffs = 400;
  EXPECT_THROW(fc.validate(), chl::Error);
  EXPECT_DOUBLE_EQ(chl::FeatureConfig{}.alpha_for(16000.0), 2.0 / 16000.0);
}

TEST(Audio, HarmonicMixtureFeaturesAreNearlyAdditive) {
  chl::FeatureConfig fc;
  const auto env_a = chl::class_envelope(0, 1);
  const auto env_b = chl::class_envelope(3, 1);
  const auto a = chl::gen_harmonic(150.0, env_a, 1.0, 16000.0, 2);
  const auto b = chl::gen_harmonic(233.0, env_b, 1.0, 16000.0, 3);
  chl::AudioSignal m = a;
  for (std::size_t t = 0; t < m.samples.size(); ++t) m.samples[t] += b.samples[t];
  const auto fa = chl::extract_all_features(a, fc).data;
  const auto fb = chl::extract_all_features(b, fc).data;
  const auto fm = chl::extract_all_features(m, fc).data;
  EXPECT_LE((fm - fa - fb).norm() / (fa + fb).norm(), 0.3);
}

#include "chilasso/audio.hpp"

#include "chilasso/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace chl {
namespace {

// The FFTW planner is not reentrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  Eigen::VectorXd magnitude(std::span<const double> x) {
    for (int i = 0; i < n_; ++i) in_[i] = x[static_cast<std::size_t>(i)];
    fftw_execute(plan_);
    Eigen::VectorXd mag(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) mag(k) = std::hypot(out_[k][0], out_[k][1]);
    return mag;
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

class Dct2 {
 public:
  explicit Dct2(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_real(static_cast<std::size_t>(n));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_r2r_1d(n, in_, out_, FFTW_REDFT10, FFTW_ESTIMATE);
  }
  ~Dct2() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  Dct2(const Dct2&) = delete;
  Dct2& operator=(const Dct2&) = delete;

  // FFTW's REDFT10 is 2 * sum x_j cos(pi (j + 1/2) k / n).
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) {
    for (int i = 0; i < n_; ++i) in_[i] = x(i);
    fftw_execute(plan_);
    Eigen::VectorXd y(n_);
    const double s0 = std::sqrt(1.0 / (4.0 * n_));
    const double sk = std::sqrt(1.0 / (2.0 * n_));
    for (int k = 0; k < n_; ++k) y(k) = out_[k] * (k == 0 ? s0 : sk);
    return y;
  }

 private:
  int n_;
  double* in_ = nullptr;
  double* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

Eigen::VectorXd emphasize(Eigen::VectorXd mag, Index frame_len, double alpha,
                          double sample_rate) {
  for (Index k = 0; k < mag.size(); ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(frame_len);
    mag(k) *= 1.0 + alpha * f;
  }
  return mag;
}

void check_frame(std::span<const double> frame, const FeatureConfig& fc) {
  if (static_cast<Index>(frame.size()) != fc.frame_len)
    throw_dimension("frame", "length " + std::to_string(frame.size()) + ", expected " +
                                 std::to_string(fc.frame_len));
}

std::vector<double> frame_energies(const Eigen::MatrixXd& frames) {
  std::vector<double> out(static_cast<std::size_t>(frames.cols()));
  for (Index j = 0; j < frames.cols(); ++j) out[static_cast<std::size_t>(j)] = frames.col(j).squaredNorm();
  return out;
}

SampleMatrix features_for(const AudioSignal& sig, const FeatureConfig& fc,
                          const Eigen::MatrixXd& frames, const std::vector<Index>& keep) {
  SampleMatrix out;
  out.data.resize(fc.n_coeffs, static_cast<Index>(keep.size()));
  out.ids.reserve(keep.size());
  RealFft fft(static_cast<int>(fc.frame_len));
  Dct2 dct(static_cast<int>(fc.frame_len / 2 + 1));
  const double alpha = fc.alpha_for(sig.sample_rate);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const Index j = keep[i];
    const auto col = frames.col(j);
    const Eigen::VectorXd mag =
        emphasize(fft.magnitude(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))),
                  fc.frame_len, alpha, sig.sample_rate);
    out.data.col(static_cast<Index>(i)) = dct(mag).head(fc.n_coeffs);
    out.ids.push_back({j * fc.hop(), 0});
  }
  return out;
}

}  // namespace

void AudioSignal::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw_invalid("sample_rate must be > 0");
  for (double s : samples)
    if (!std::isfinite(s)) throw_numeric("audio has non-finite samples");
}

void FeatureConfig::validate() const {
  if (frame_len < 2) throw_invalid("frame_len must be >= 2");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw_invalid("overlap must be in [0, 1)");
  if (n_coeffs < 1 || n_coeffs > frame_len / 2 + 1)
    throw_invalid("n_coeffs must be in [1, frame_len/2 + 1]");
  if (!(voiced_energy_frac >= 0.0 && voiced_energy_frac <= 1.0))
    throw_invalid("voiced_energy_frac must be in [0, 1]");
  if (emphasis_alpha && !std::isfinite(*emphasis_alpha)) throw_invalid("emphasis_alpha must be finite");
}

Index FeatureConfig::hop() const {
  const auto h = static_cast<Index>(std::llround(static_cast<double>(frame_len) * (1.0 - overlap)));
  return std::max<Index>(h, 1);
}

double FeatureConfig::alpha_for(double sample_rate) const {
  return emphasis_alpha.value_or(2.0 / sample_rate);
}

std::vector<double> make_window(WindowKind kind, Index n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
    switch (kind) {
      case WindowKind::kHann: w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * c; break;
      case WindowKind::kHamming: w[static_cast<std::size_t>(i)] = 0.54 - 0.46 * c; break;
      case WindowKind::kRectangular: break;
    }
  }
  return w;
}

Eigen::MatrixXd frame_signal(const AudioSignal& sig, const FeatureConfig& fc) {
  fc.validate();
  sig.validate();
  const auto len = static_cast<Index>(sig.samples.size());
  if (len < fc.frame_len)
    throw_invalid("signal of " + std::to_string(len) + " samples is shorter than one frame");
  const Index hop = fc.hop();
  const Index count = (len - fc.frame_len) / hop + 1;
  const auto window = make_window(fc.window, fc.frame_len);
  Eigen::MatrixXd frames(fc.frame_len, count);
  for (Index j = 0; j < count; ++j)
    for (Index i = 0; i < fc.frame_len; ++i)
      frames(i, j) = sig.samples[static_cast<std::size_t>(j * hop + i)] * window[static_cast<std::size_t>(i)];
  return frames;
}

Eigen::VectorXd emphasized_magnitude(std::span<const double> frame, const FeatureConfig& fc,
                                     double sample_rate) {
  fc.validate();
  check_frame(frame, fc);
  RealFft fft(static_cast<int>(fc.frame_len));
  return emphasize(fft.magnitude(frame), fc.frame_len, fc.alpha_for(sample_rate), sample_rate);
}

Eigen::VectorXd dct2_orthonormal(const Eigen::VectorXd& x) {
  if (x.size() < 1) throw_invalid("DCT of an empty vector");
  Dct2 dct(static_cast<int>(x.size()));
  return dct(x);
}

Eigen::VectorXd spectral_feature(std::span<const double> frame, const FeatureConfig& fc,
                                 double sample_rate) {
  return dct2_orthonormal(emphasized_magnitude(frame, fc, sample_rate)).head(fc.n_coeffs);
}

std::vector<Index> select_voiced(const Eigen::MatrixXd& frames, const FeatureConfig& fc) {
  const auto energies = frame_energies(frames);
  std::vector<Index> out;
  double peak = 0.0;
  for (double e : energies) peak = std::max(peak, e);
  if (peak <= 0.0) return out;
  const double threshold = fc.voiced_energy_frac * peak;
  for (std::size_t j = 0; j < energies.size(); ++j)
    if (energies[j] >= threshold) out.push_back(static_cast<Index>(j));
  return out;
}

SampleMatrix extract_features(const AudioSignal& sig, const FeatureConfig& fc) {
  const Eigen::MatrixXd frames = frame_signal(sig, fc);
  return features_for(sig, fc, frames, select_voiced(frames, fc));
}

SampleMatrix extract_all_features(const AudioSignal& sig, const FeatureConfig& fc) {
  const Eigen::MatrixXd frames = frame_signal(sig, fc);
  std::vector<Index> all(static_cast<std::size_t>(frames.cols()));
  for (Index j = 0; j < frames.cols(); ++j) all[static_cast<std::size_t>(j)] = j;
  return features_for(sig, fc, frames, all);
}

AudioSignal resample(const AudioSignal& sig, double target_rate) {
  sig.validate();
  if (!(target_rate > 0.0)) throw_invalid("target rate must be > 0");
  if (target_rate == sig.sample_rate) return sig;

  const double ratio = target_rate / sig.sample_rate;
  const double cutoff = 0.5 * std::min(1.0, ratio);  // cycles per input sample
  const double half_width = 16.0 / std::min(1.0, ratio);
  const auto in_len = static_cast<Index>(sig.samples.size());
  const auto out_len = static_cast<Index>(std::floor(static_cast<double>(in_len) * ratio));

  AudioSignal out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (Index n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const auto lo = static_cast<Index>(std::ceil(t - half_width));
    const auto hi = static_cast<Index>(std::floor(t + half_width));
    double acc = 0.0;
    for (Index k = std::max<Index>(lo, 0); k <= std::min(hi, in_len - 1); ++k) {
      const double tau = t - static_cast<double>(k);
      const double x = 2.0 * cutoff * tau;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * tau / half_width);
      acc += sig.samples[static_cast<std::size_t>(k)] * 2.0 * cutoff * sinc * win;
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace chl

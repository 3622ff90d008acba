// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails. Dataset-dependent checks print SKIP unless their
// data is supplied through the environment.

#include "oracles.hpp"

#include "chilasso/audio.hpp"
#include "chilasso/dict_learn.hpp"
#include "chilasso/gdict.hpp"
#include "chilasso/harness.hpp"
#include "chilasso/io.hpp"
#include "chilasso/prox.hpp"
#include "chilasso/solvers.hpp"
#include "chilasso/synth.hpp"
#include "chilasso/texture.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace {

using Clock = std::chrono::steady_clock;
using chl::Index;

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

int failures = 0;

void report(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (o.skipped) {
    std::printf("SKIP %-28s %s\n", name.c_str(), o.detail.c_str());
    return;
  }
  const bool in_time = secs <= budget_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %-28s %s; %.1f s (budget %.0f s%s)\n", ok ? "PASS" : "FAIL", name.c_str(),
              o.detail.c_str(), secs, budget_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Eigen::MatrixXd gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

chl::GroupedDictionary random_dict(Index m, const std::vector<Index>& sizes, std::mt19937_64& rng) {
  Index p = 0;
  std::vector<std::string> labels;
  for (Index s : sizes) {
    p += s;
    labels.push_back("g" + std::to_string(labels.size()));
  }
  return chl::GroupedDictionary::normalized(gaussian(m, p, rng), chl::GroupPartition::from_sizes(sizes),
                                            labels);
}

chl::SolverConfig tight() {
  chl::SolverConfig s;
  s.rel_tol = 1e-12;
  s.max_iters = 200000;
  return s;
}

double rel_gap(double f, double ref) { return std::abs(f - ref) / std::max(std::abs(ref), 1e-300); }

// ------------------------------------------------------------------------

Outcome prox_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> thr(0.0, 1.5);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng);
    std::vector<Index> sizes;
    for (int left = n; left > 0;) {
      const int s = std::uniform_int_distribution<int>(1, left)(rng);
      sizes.push_back(s);
      left -= s;
    }
    const Eigen::VectorXd v = gaussian(n, 1, rng) * 2.0;
    const double t1 = thr(rng), t2 = thr(rng);
    const Eigen::VectorXd got = chl::prox_hilasso(v, t1, t2, chl::GroupPartition::from_sizes(sizes));
    const Eigen::VectorXd want = oracle::prox_sparse_group(v, t1, t2, {sizes});
    worst = std::max(worst, (got - want).norm());
  }
  return {worst <= 1e-4, fmt("max l2 error %.2e over 200 inputs (tol 1e-4)", worst)};
}

Outcome solver_optimality() {
  std::mt19937_64 rng(202);
  const std::vector<Index> sizes{4, 4, 4};
  double worst[5] = {0, 0, 0, 0, 0};
  for (int inst = 0; inst < 50; ++inst) {
    const auto dict = random_dict(8, sizes, rng);
    const Eigen::MatrixXd x = gaussian(8, 4, rng);
    const Eigen::MatrixXd& d = dict.atoms();
    const oracle::Blocks b{sizes};
    const double lam = 0.3;

    {
      const auto r = chl::solve_lasso(dict, x, lam, tight());
      oracle::Weights w;
      w.l1 = lam;
      const double ref = oracle::objective(d, x, oracle::lasso_cd(d, x, lam), b, w);
      worst[0] = std::max(worst[0], rel_gap(oracle::objective(d, x, r.coefficients, b, w), ref));
    }
    {
      const auto r = chl::solve_group_lasso(dict, x, lam, tight());
      oracle::Weights w;
      w.per_sample.assign(3, lam);
      const double ref = oracle::objective(d, x, oracle::block_cd(d, x, b, w), b, w);
      worst[1] = std::max(worst[1], rel_gap(oracle::objective(d, x, r.coefficients, b, w), ref));
    }
    {
      const auto r = chl::solve_collab_lasso(dict, x, lam, tight());
      oracle::Weights w;
      w.row = lam;
      const double ref = oracle::objective(d, x, oracle::block_cd(d, x, b, w), b, w);
      worst[2] = std::max(worst[2], rel_gap(oracle::objective(d, x, r.coefficients, b, w), ref));
    }
    {
      const auto r = chl::solve_cglasso(dict, x, lam, tight());
      oracle::Weights w;
      w.frob.assign(3, lam);
      const double ref = oracle::objective(d, x, oracle::block_cd(d, x, b, w), b, w);
      worst[3] = std::max(worst[3], rel_gap(oracle::objective(d, x, r.coefficients, b, w), ref));
    }
    {
      chl::SolverConfig cfg = tight();
      cfg.lambda1 = 0.2;
      cfg.lambda2_0 = 0.05;
      const auto r = chl::solve_chilasso(dict, x, cfg);
      oracle::Weights w;
      w.l1 = cfg.lambda1;
      w.frob.assign(3, cfg.lambda2_0 * std::sqrt(4.0 * 4.0));
      const double ref = oracle::objective(d, x, oracle::block_cd(d, x, b, w), b, w);
      worst[4] = std::max(worst[4], rel_gap(oracle::objective(d, x, r.coefficients, b, w), ref));
    }
  }
  const double top = *std::max_element(worst, worst + 5);
  return {top <= 1e-6,
          fmt("worst rel gap lasso %.1e group %.1e collab %.1e", worst[0], worst[1], worst[2]) +
              fmt(" cglasso %.1e chilasso %.1e (tol 1e-6)", worst[3], worst[4])};
}

Outcome reduction_lattice() {
  std::mt19937_64 rng(303);
  double gap_cgl = 0.0, gap_lasso = 0.0, gap_single = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto dict = random_dict(10, {5, 5, 5}, rng);
    const Eigen::MatrixXd x = gaussian(10, 6, rng);
    const chl::GroupPartition& g = dict.groups();

    chl::SolverConfig cfg = tight();
    cfg.lambda1 = 0.0;
    cfg.lambda2_0 = 0.1;
    const auto w = chl::group_weights(cfg, g, x.cols());
    const auto h = chl::solve_chilasso(dict, x, cfg);
    const auto c = chl::solve_cglasso(dict, x, w.front(), tight());
    const double fh = chl::objective_chilasso(dict, x, h.coefficients, 0.0, w);
    const double fc = chl::objective_chilasso(dict, x, c.coefficients, 0.0, w);
    gap_cgl = std::max(gap_cgl, rel_gap(fh, fc));

    cfg.lambda1 = 0.25;
    cfg.lambda2_0 = 0.0;
    const auto h2 = chl::solve_chilasso(dict, x, cfg);
    double lasso_sum = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      const auto l = chl::solve_lasso(dict, x.col(j), 0.25, tight());
      lasso_sum += chl::objective_lasso(dict, x.col(j), l.coefficients.col(0), 0.25);
    }
    gap_lasso = std::max(gap_lasso, rel_gap(chl::objective_chilasso(dict, x, h2.coefficients, 0.25, 0.0), lasso_sum));

    const chl::GroupedDictionary singles(dict.atoms(), chl::GroupPartition::singletons(dict.cols()),
                                         std::vector<std::string>(static_cast<std::size_t>(dict.cols()), "a"));
    const auto gl = chl::solve_group_lasso(singles, x, 0.25, tight());
    const auto ls = chl::solve_lasso(singles, x, 0.25, tight());
    const double fg = 0.5 * (x - singles.atoms() * gl.coefficients).squaredNorm() + 0.25 * gl.coefficients.cwiseAbs().sum();
    const double fl = 0.5 * (x - singles.atoms() * ls.coefficients).squaredNorm() + 0.25 * ls.coefficients.cwiseAbs().sum();
    gap_single = std::max(gap_single, rel_gap(fg, fl));
  }
  const double top = std::max({gap_cgl, gap_lasso, gap_single});
  return {top <= 1e-6, fmt("rel gaps: l1=0 vs C-GLasso %.1e, l2=0 vs Lasso %.1e, singletons %.1e (tol 1e-6)",
                           gap_cgl, gap_lasso, gap_single)};
}

struct RecoveryStats {
  double mean_hamming = 0.0;
  double exact = 0.0;
};

RecoveryStats recovery(chl::harness::Method method, double snr, Index n, int trials, std::uint64_t seed) {
  chl::SynthSpec spec;
  spec.m = 32;
  spec.groups = 8;
  spec.group_size = 16;
  spec.active_groups = 2;
  spec.atoms_per_group = 3;
  spec.snr_db = snr;
  spec.n = n;
  RecoveryStats s;
  for (int t = 0; t < trials; ++t) {
    spec.seed = seed + static_cast<std::uint64_t>(t);
    const auto prob = chl::gen_grouped_sparse(spec);
    const auto c = chl::harness::code_collection(method, prob.dict, prob.samples.data, chl::harness::default_bench_coding());
    const Index h = chl::hamming(c.active, prob.truth);
    s.mean_hamming += static_cast<double>(h) / trials;
    s.exact += (h == 0 ? 1.0 : 0.0) / trials;
  }
  return s;
}

Outcome synthetic_recovery() {
  const auto chl_stats = recovery(chl::harness::Method::kChilasso, 30.0, 64, 100, 4000);
  const auto lasso = recovery(chl::harness::Method::kLasso, 30.0, 64, 100, 4000);
  const bool ok = chl_stats.mean_hamming <= 0.1 && chl_stats.exact >= 0.95 &&
                  lasso.mean_hamming >= 5.0 * chl_stats.mean_hamming;
  return {ok, fmt("C-HiLasso Hamming %.3f (<= 0.1), exact %.2f (>= 0.95); Lasso Hamming %.3f (>= 5x)",
                  chl_stats.mean_hamming, chl_stats.exact, lasso.mean_hamming)};
}

Outcome collaboration() {
  const auto many = recovery(chl::harness::Method::kChilasso, 15.0, 64, 100, 5000);
  const auto one = recovery(chl::harness::Method::kChilasso, 15.0, 1, 100, 5000);
  const double gain = 100.0 * (many.exact - one.exact);
  return {gain >= 10.0, fmt("recovery n=64 %.2f, n=1 %.2f, gain %.0f pp (>= 10)", many.exact, one.exact, gain)};
}

// Band-limited harmonic source: the envelope is zero outside [lo, hi] Hz.
chl::AudioSignal band_source(double f0, double lo, double hi, std::uint64_t seed) {
  auto env = [lo, hi](double hz) { return (hz >= lo && hz <= hi) ? 1.0 / (1.0 + hz / 1000.0) : 0.0; };
  return chl::gen_harmonic(f0, env, 1.0, 16000.0, seed);
}

Outcome feature_linearity() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> f0(110.0, 240.0);
  chl::FeatureConfig fc;
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const auto a = band_source(f0(rng), 0.0, 2500.0, rng());
    const auto b = band_source(f0(rng), 3200.0, 8000.0, rng());
    chl::AudioSignal mix = a;
    for (std::size_t t = 0; t < mix.samples.size(); ++t) mix.samples[t] += b.samples[t];
    const auto fa = chl::extract_all_features(a, fc).data;
    const auto fb = chl::extract_all_features(b, fc).data;
    const auto fm = chl::extract_all_features(mix, fc).data;
    worst = std::max(worst, (fm - fa - fb).norm() / (fa + fb).norm());
  }
  return {worst <= 0.15, fmt("worst relative additivity error %.4f over 20 pairs (<= 0.15)", worst)};
}

Outcome texture_desk_scale() {
  chl::harness::TextureExperimentConfig cfg;
  cfg.baselines = true;
  const auto sources = chl::harness::synthetic_textures(4, 64, 128, 0);
  const auto res = chl::harness::run_texture_experiment(sources, cfg);
  const auto& s = res.summary;
  const double combos = static_cast<double>(res.rows.size() / 3);
  const bool ok = combos == 6 && s[0].mean_hamming <= 0.5 && s[0].apsnr >= s[1].apsnr + 1.0 &&
                  s[0].mean_hamming < s[2].mean_hamming;
  return {ok, fmt("%.0f pairs; Hamming C-HiLasso %.2f (<= 0.5), C-GLasso %.2f (must exceed); ", combos,
                  s[0].mean_hamming, s[2].mean_hamming) +
                  fmt("APSNR C-HiLasso %.2f dB vs Lasso %.2f dB (needs +1 dB)", s[0].apsnr, s[1].apsnr)};
}

Outcome round_trips() {
  std::mt19937_64 rng(808);
  const auto dict = random_dict(17, {3, 9, 1, 6}, rng);
  const auto bytes = chl::encode_gdict(dict);
  const auto back = chl::decode_gdict(bytes);
  const bool dict_ok = back == dict && chl::encode_gdict(back) == bytes &&
                       std::memcmp(back.atoms().data(), dict.atoms().data(),
                                   sizeof(double) * static_cast<std::size_t>(dict.atoms().size())) == 0;

  chl::GrayImage img{Eigen::MatrixXd::Random(37, 29) * 127.0 + Eigen::MatrixXd::Constant(37, 29, 128.0), ""};
  double worst = 0.0;
  for (Index stride : {1, 3, 7}) {
    chl::PatchConfig pc;
    pc.stride = stride;
    const auto p = chl::extract_patches(img, pc);
    const auto r = chl::reassemble(p, img.height(), img.width(), pc);
    for (Index i = 0; i < img.height(); ++i)
      for (Index j = 0; j < img.width(); ++j)
        if (r.coverage(i, j) > 0) worst = std::max(worst, std::abs(r.image.pixels(i, j) - img.pixels(i, j)));
  }
  return {dict_ok && worst <= 1e-10,
          std::string("GDICT1 ") + (dict_ok ? "bit-exact" : "MISMATCH") + fmt(", patch max error %.1e (<= 1e-10)", worst)};
}

Outcome mirex() {
  const char* dir = std::getenv("CHILASSO_MIREX_DIR");
  if (!dir) return {false, "set CHILASSO_MIREX_DIR to a directory with one sub-directory of WAV files per instrument", true};
  namespace fs = std::filesystem;
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  chl::harness::AudioExperimentConfig cfg;
  cfg.frame_seconds = 3.0;
  cfg.baselines = true;
  std::vector<chl::harness::AudioClass> classes;
  for (const auto& d : class_dirs) {
    chl::harness::AudioClass c{d.filename().string(), {{}, cfg.sample_rate}};
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(d))
      if (f.path().extension() == ".wav") files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto s = chl::read_wav(f);
      if (s.sample_rate != cfg.sample_rate) s = chl::resample(s, cfg.sample_rate);
      c.signal.samples.insert(c.signal.samples.end(), s.samples.begin(), s.samples.end());
    }
    if (!c.signal.samples.empty()) classes.push_back(std::move(c));
  }
  const auto parts = chl::harness::learn_audio_dictionaries(classes, cfg);
  const auto dict = chl::concat_dictionaries(parts);
  std::vector<chl::harness::AudioClass> test;
  for (const auto& c : classes) test.push_back({c.label, chl::harness::split_train_test(c.signal, cfg.train_fraction).second});
  const auto res = chl::harness::run_audio_identification(chl::harness::make_mixtures(test, 2), dict, cfg);
  double total_chl = 0.0, total_lasso = 0.0;
  for (const auto& r : res.rows) {
    if (r.method == chl::harness::Method::kChilasso) total_chl += static_cast<double>(r.hamming);
    if (r.method == chl::harness::Method::kLasso) total_lasso += static_cast<double>(r.hamming);
  }
  return {total_chl < total_lasso, fmt("total Hamming C-HiLasso %.0f vs Lasso %.0f", total_chl, total_lasso)};
}

}  // namespace

int main() {
  report("prox-oracle-equivalence", 10, prox_oracle);
  report("solver-optimality", 60, solver_optimality);
  report("reduction-lattice", 30, reduction_lattice);
  report("synthetic-group-recovery", 300, synthetic_recovery);
  report("collaboration-benefit", 300, collaboration);
  report("feature-linearity", 30, feature_linearity);
  report("texture-desk-scale", 600, texture_desk_scale);
  report("round-trips", 60, round_trips);
  report("mirex-instruments", 3600, mirex);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#include "chilasso/harness.hpp"

#include "chilasso/dict_learn.hpp"
#include "chilasso/error.hpp"
#include "chilasso/parallel.hpp"
#include "chilasso/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

namespace chl::harness {

std::string method_name(Method m) {
  switch (m) {
    case Method::kChilasso: return "chilasso";
    case Method::kLasso: return "lasso";
    case Method::kCglasso: return "cglasso";
  }
  return "unknown";
}

namespace {

std::vector<Method> methods_for(bool baselines) {
  if (baselines) return {Method::kChilasso, Method::kLasso, Method::kCglasso};
  return {Method::kChilasso};
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<Index>> combinations(Index n, Index k) {
  std::vector<std::vector<Index>> out;
  if (k < 0 || k > n) return out;
  std::vector<Index> cur(static_cast<std::size_t>(k));
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    Index i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

CodingConfig default_audio_coding() {
  CodingConfig c;
  c.solver.lambda1 = 0.1;
  c.solver.lambda2_0 = 0.02;
  c.solver.rel_tol = 1e-4;
  c.solver.max_iters = 2000;
  c.lasso_lambda = 0.1;
  c.cglasso_lambda_0 = 0.02;
  return c;
}

CodingConfig default_texture_coding() {
  CodingConfig c;
  c.solver.lambda1 = 0.05;
  c.solver.lambda2_0 = 0.02;
  c.solver.rel_tol = 1e-4;
  c.solver.max_iters = 2000;
  c.lasso_lambda = 0.05;
  c.cglasso_lambda_0 = 0.02;
  return c;
}

CodingConfig default_bench_coding() {
  CodingConfig c;
  c.solver.lambda1 = 0.2;
  c.solver.lambda2_0 = 0.04;
  c.lasso_lambda = 0.2;
  c.cglasso_lambda_0 = 0.04;
  return c;
}

CodingOutcome code_collection(Method method, const GroupedDictionary& dict,
                              const Eigen::MatrixXd& samples, const CodingConfig& cfg) {
  if (samples.rows() != dict.rows())
    throw_dimension("samples", std::to_string(samples.rows()) + " rows, dictionary has " +
                                   std::to_string(dict.rows()));
  CodingOutcome out;
  if (samples.cols() == 0) {
    out.codes = CoefficientMatrix::Zero(dict.cols(), 0);
    out.active = detect_active(out.codes, dict.groups(), cfg.detection);
    out.converged = true;
    return out;
  }
  if (cfg.normalize_collection) {
    const double s = samples.colwise().norm().mean();
    if (s > 0.0) out.scale = s;
  }
  const Eigen::MatrixXd x = samples / out.scale;

  SolveResult r;
  switch (method) {
    case Method::kChilasso:
      r = solve_chilasso(dict, x, cfg.solver);
      break;
    case Method::kLasso:
      r = solve_lasso(dict, x, cfg.lasso_lambda, cfg.solver);
      break;
    case Method::kCglasso: {
      SolverConfig weights = cfg.solver;
      weights.lambda2_0 = cfg.cglasso_lambda_0;
      Penalty p;
      p.kind = PenaltyKind::kGroupFrobenius;
      p.group_weights = group_weights(weights, dict.groups(), x.cols());
      r = solve_proximal(dict, x, p, cfg.solver);
      break;
    }
  }
  out.codes = std::move(r.coefficients);
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.trace = std::move(r.objective_trace);
  out.active = detect_active(out.codes, dict.groups(), cfg.detection);
  return out;
}

GroupedDictionary learn_class_dictionary(const SampleMatrix& samples, const std::string& label,
                                         const LearnParams& params, std::uint64_t seed,
                                         std::vector<std::string>* warnings) {
  std::vector<Index> keep;
  for (Index j = 0; j < samples.cols(); ++j)
    if (samples.data.col(j).norm() > 0.0) keep.push_back(j);
  if (keep.empty()) throw_invalid("class '" + label + "' has no non-zero training samples");

  if (params.max_samples > 0 && static_cast<Index>(keep.size()) > params.max_samples) {
    std::mt19937_64 rng(derive_seed(seed, 0));
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(static_cast<std::size_t>(params.max_samples));
    std::sort(keep.begin(), keep.end());
  }

  TrainingSet ts;
  ts.samples.data.resize(samples.rows(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    ts.samples.data.col(static_cast<Index>(k)) = samples.data.col(keep[k]).normalized();
    ts.samples.ids.push_back(samples.ids[static_cast<std::size_t>(keep[k])]);
  }
  ts.class_label = label;
  ts.atom_count = params.atom_count;
  ts.lambda = params.lambda;
  ts.epochs = params.epochs;

  LearnReport report;
  GroupedDictionary d = learn_subdictionary(ts, params.solver, derive_seed(seed, 1), &report);
  if (warnings)
    for (const auto& w : report.warnings) warnings->push_back(label + ": " + w);
  return d;
}

// ---------------------------------------------------------------- audio

std::pair<AudioSignal, AudioSignal> split_train_test(const AudioSignal& sig, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw_invalid("train_fraction must be in (0, 1)");
  const auto cut = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(sig.samples.size())));
  AudioSignal train{{sig.samples.begin(), sig.samples.begin() + static_cast<std::ptrdiff_t>(cut)},
                    sig.sample_rate};
  AudioSignal test{{sig.samples.begin() + static_cast<std::ptrdiff_t>(cut), sig.samples.end()},
                   sig.sample_rate};
  return {std::move(train), std::move(test)};
}

std::vector<GroupedDictionary> learn_audio_dictionaries(const std::vector<AudioClass>& classes,
                                                        const AudioExperimentConfig& cfg,
                                                        std::vector<std::string>* warnings) {
  if (classes.empty()) throw_invalid("no audio classes given");
  std::vector<std::optional<GroupedDictionary>> parts(classes.size());
  std::vector<std::vector<std::string>> notes(classes.size());
  parallel_for(classes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& c = classes[i];
    const AudioSignal train = split_train_test(c.signal, cfg.train_fraction).first;
    const SampleMatrix feats = extract_features(train, cfg.features);
    if (feats.empty()) throw_invalid("class '" + c.label + "' has no voiced training frames");
    parts[i] = learn_class_dictionary(feats, c.label, cfg.learn, derive_seed(cfg.seed, i),
                                      &notes[i]);
  });
  if (warnings)
    for (const auto& n : notes) warnings->insert(warnings->end(), n.begin(), n.end());
  std::vector<GroupedDictionary> out;
  for (auto& p : parts) out.push_back(std::move(*p));
  return out;
}

std::vector<TestItem> make_mixtures(const std::vector<AudioClass>& test_parts, Index max_sources) {
  const auto n = static_cast<Index>(test_parts.size());
  if (max_sources < 1) throw_invalid("max_sources must be >= 1");
  std::vector<TestItem> out;
  for (Index k = 1; k <= std::min(max_sources, n); ++k) {
    for (const auto& combo : combinations(n, k)) {
      TestItem item;
      std::size_t len = std::numeric_limits<std::size_t>::max();
      for (Index c : combo) {
        const auto& part = test_parts[static_cast<std::size_t>(c)];
        len = std::min(len, part.signal.samples.size());
        item.name += (item.name.empty() ? "" : "+") + part.label;
      }
      item.signal.sample_rate = test_parts[static_cast<std::size_t>(combo.front())].signal.sample_rate;
      item.signal.samples.assign(len, 0.0);
      for (Index c : combo) {
        const auto& s = test_parts[static_cast<std::size_t>(c)].signal;
        if (s.sample_rate != item.signal.sample_rate)
          throw_invalid("mixture members have different sample rates");
        for (std::size_t t = 0; t < len; ++t) item.signal.samples[t] += s.samples[t];
      }
      item.truth = combo;
      out.push_back(std::move(item));
    }
  }
  return out;
}

std::vector<SampleMatrix> split_frames(const SampleMatrix& features, double sample_rate,
                                       Index signal_length, double frame_seconds) {
  if (!(frame_seconds > 0.0)) throw_invalid("frame_seconds must be > 0");
  const auto frame_len = static_cast<std::int64_t>(std::llround(frame_seconds * sample_rate));
  if (frame_len < 1) throw_invalid("frame_seconds is shorter than one sample");
  const std::int64_t count = signal_length / frame_len;

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(count));
  for (Index j = 0; j < features.cols(); ++j) {
    const std::int64_t f = features.ids[static_cast<std::size_t>(j)].first / frame_len;
    if (f < count) members[static_cast<std::size_t>(f)].push_back(j);
  }
  std::vector<SampleMatrix> out;
  for (const auto& cols : members) {
    SampleMatrix s;
    s.data.resize(features.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      s.data.col(static_cast<Index>(k)) = features.data.col(cols[k]);
      s.ids.push_back(features.ids[static_cast<std::size_t>(cols[k])]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

AudioIdentifyResult run_audio_identification(const std::vector<TestItem>& items,
                                             const GroupedDictionary& dict,
                                             const AudioExperimentConfig& cfg) {
  cfg.features.validate();
  const auto methods = methods_for(cfg.baselines);

  struct Job {
    std::size_t item;
    Index frame;
    const SampleMatrix* samples;
  };
  std::vector<std::vector<SampleMatrix>> frames(items.size());
  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    const SampleMatrix feats = extract_features(items[i].signal, cfg.features);
    frames[i] = split_frames(feats, items[i].signal.sample_rate,
                             static_cast<Index>(items[i].signal.samples.size()), cfg.frame_seconds);
  });
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t f = 0; f < frames[i].size(); ++f)
      jobs.push_back({i, static_cast<Index>(f), &frames[i][f]});

  AudioIdentifyResult out;
  out.rows.resize(jobs.size() * methods.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t k) {
    const Job& job = jobs[k];
    const TestItem& item = items[job.item];
    for (Index t : item.truth)
      if (t < 0 || t >= dict.group_count()) throw_invalid("truth index outside the dictionary");
    const ActiveGroupSet truth = make_active_set(dict.group_count(), item.truth);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const CodingOutcome c = code_collection(methods[m], dict, job.samples->data, cfg.coding);
      FrameDetection& row = out.rows[k * methods.size() + m];
      row.item = item.name;
      row.frame = job.frame;
      row.method = methods[m];
      row.n_columns = job.samples->cols();
      row.detected = c.active;
      row.truth = truth;
      row.hamming = hamming(c.active, truth);
      row.iterations = c.iterations;
      row.converged = c.converged;
    }
  });

  for (Method m : methods) {
    std::vector<double> all, single, multi;
    for (const auto& r : out.rows) {
      if (r.method != m) continue;
      const auto h = static_cast<double>(r.hamming);
      all.push_back(h);
      (r.truth.active_count() == 1 ? single : multi).push_back(h);
    }
    out.summary.push_back({m, mean_of(all), mean_of(single), mean_of(multi),
                           static_cast<Index>(all.size())});
  }
  return out;
}

std::vector<AudioClass> synthetic_audio_classes(Index count, double seconds, double fs,
                                                std::uint64_t seed) {
  if (count < 1 || count > 8) throw_invalid("synthetic audio supports 1..8 classes");
  std::vector<AudioClass> out;
  for (Index i = 0; i < count; ++i) {
    const FormantEnvelope env = class_envelope(static_cast<int>(i), seed);
    const double low = 100.0 + 25.0 * static_cast<double>(i);
    const double high = low * 1.6;
    AudioClass c;
    c.label = "voice" + std::to_string(i);
    c.signal = gen_note_sequence(env, low, high, 0.3, seconds, fs, derive_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(std::move(c));
  }
  return out;
}

// -------------------------------------------------------------- texture

namespace {

GrayImage left_half(const GrayImage& img) {
  return {img.pixels.leftCols(img.width() / 2), img.provenance};
}

GrayImage right_half(const GrayImage& img) {
  return {img.pixels.rightCols(img.width() - img.width() / 2), img.provenance};
}

// What a perfect separation would reproduce: the source seen through the same
// patch extraction (and centering) and reassembly as the mixture.
GrayImage patch_view(const GrayImage& img, const PatchConfig& pc) {
  return reassemble(extract_patches(img, pc), img.height(), img.width(), pc).image;
}

}  // namespace

TextureExperimentResult run_texture_experiment(const std::vector<TextureSource>& sources,
                                               const TextureExperimentConfig& cfg,
                                               const std::vector<GroupedDictionary>* pretrained) {
  cfg.patch.validate();
  if (sources.empty()) throw_invalid("no texture sources given");
  const Index h = sources.front().image.height();
  const Index w = sources.front().image.width();
  for (const auto& s : sources)
    if (s.image.height() != h || s.image.width() != w)
      throw_dimension("textures", "all source images must share one size");
  if (w / 2 < cfg.patch.patch || h < cfg.patch.patch)
    throw_invalid("texture halves are smaller than one patch");
  if (cfg.mix_count < 1 || cfg.mix_count > static_cast<Index>(sources.size()))
    throw_invalid("mix_count must be in [1, number of sources]");
  if (static_cast<Index>(cfg.mix_weights.size()) != cfg.mix_count)
    throw_invalid("mix_weights needs one weight per mixed source");

  TextureExperimentResult out;
  if (pretrained) {
    out.parts = *pretrained;
    if (out.parts.size() != sources.size())
      throw_dimension("dictionaries", std::to_string(out.parts.size()) + " dictionaries for " +
                                          std::to_string(sources.size()) + " textures");
  } else {
    std::vector<std::optional<GroupedDictionary>> parts(sources.size());
    PatchConfig train = cfg.patch;
    train.stride = cfg.train_stride;
    parallel_for(sources.size(), cfg.jobs, [&](std::size_t i) {
      const SampleMatrix s = extract_patches(left_half(sources[i].image), train);
      parts[i] = learn_class_dictionary(s, sources[i].label, cfg.learn, derive_seed(cfg.seed, i));
    });
    for (auto& p : parts) out.parts.push_back(std::move(*p));
  }
  const GroupedDictionary dict = concat_dictionaries(out.parts);
  if (dict.rows() != cfg.patch.patch * cfg.patch.patch)
    throw_dimension("dictionaries", std::to_string(dict.rows()) + " rows for " +
                                        std::to_string(cfg.patch.patch) + "x" +
                                        std::to_string(cfg.patch.patch) + " patches");

  const auto combos = combinations(static_cast<Index>(sources.size()), cfg.mix_count);
  const auto methods = methods_for(cfg.baselines);
  out.rows.resize(combos.size() * methods.size());
  parallel_for(combos.size(), cfg.jobs, [&](std::size_t k) {
    const auto& combo = combos[k];
    std::vector<GrayImage> refs;
    GrayImage mix{Eigen::MatrixXd::Zero(h, w - w / 2), "mixture"};
    for (std::size_t s = 0; s < combo.size(); ++s) {
      GrayImage part = right_half(sources[static_cast<std::size_t>(combo[s])].image);
      part.pixels *= cfg.mix_weights[s];
      mix.pixels += part.pixels;
      refs.push_back(patch_view(part, cfg.patch));
    }
    const SampleMatrix x = extract_patches(mix, cfg.patch);
    const ActiveGroupSet truth = make_active_set(dict.group_count(), combo);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      const CodingOutcome c = code_collection(methods[m], dict, x.data, cfg.coding);
      TextureComboResult& row = out.rows[k * methods.size() + m];
      row.sources = combo;
      row.method = methods[m];
      row.detected = c.active;
      row.hamming = hamming(c.active, truth);
      row.mixture = mix;
      const auto recovered = separate_sources(c.codes, dict, c.active);
      for (std::size_t s = 0; s < combo.size(); ++s) {
        SampleMatrix patches{Eigen::MatrixXd::Zero(x.rows(), x.cols()), x.ids};
        for (const auto& r : recovered)
          if (r.group == combo[s]) patches.data = r.patches * c.scale;
        GrayImage img = reassemble(patches, mix.height(), mix.width(), cfg.patch).image;
        img.provenance = sources[static_cast<std::size_t>(combo[s])].label;
        row.psnr.push_back(psnr(img, refs[s]));
        row.reconstructions.push_back(std::move(img));
      }
      row.apsnr = mean_of(row.psnr);
    }
  });

  for (Method m : methods) {
    std::vector<double> hs, ps;
    for (const auto& r : out.rows) {
      if (r.method != m) continue;
      hs.push_back(static_cast<double>(r.hamming));
      ps.push_back(r.apsnr);
    }
    out.summary.push_back({m, mean_of(hs), mean_of(ps)});
  }
  return out;
}

std::vector<TextureSource> synthetic_textures(Index count, Index height, Index width,
                                              std::uint64_t seed) {
  struct Stock {
    const char* label;
    TextureKind kind;
    double angle, period, band_low, band_high;
  };
  static const Stock stock[] = {
      {"band0", TextureKind::kNoiseBand, 0.0, 8.0, 0.06, 0.14},
      {"band70", TextureKind::kNoiseBand, 70.0, 8.0, 0.12, 0.22},
      {"checker20", TextureKind::kChecker, 20.0, 5.0, 0.0, 0.0},
      {"sine130", TextureKind::kOrientedSine, 130.0, 7.0, 0.0, 0.0},
      {"band135", TextureKind::kNoiseBand, 135.0, 8.0, 0.04, 0.10},
      {"checker60", TextureKind::kChecker, 60.0, 9.0, 0.0, 0.0},
      {"sine35", TextureKind::kOrientedSine, 35.0, 4.0, 0.0, 0.0},
      {"band100", TextureKind::kNoiseBand, 100.0, 8.0, 0.18, 0.28},
  };
  constexpr Index kStock = static_cast<Index>(std::size(stock));
  if (count < 1 || count > kStock)
    throw_invalid("synthetic textures support 1.." + std::to_string(kStock) + " classes");
  std::vector<TextureSource> out;
  for (Index i = 0; i < count; ++i) {
    const Stock& s = stock[i];
    TextureParams p;
    p.angle_deg = s.angle;
    p.period = s.period;
    p.band_low = s.band_low;
    p.band_high = s.band_high;
    p.angle_spread_deg = 25.0;
    p.components = 60;
    p.contrast = 30.0;
    p.noise = 3.0;
    out.push_back({s.label, gen_texture(s.kind, p, height, width, derive_seed(seed, static_cast<std::uint64_t>(i)))});
  }
  return out;
}

// ------------------------------------------------------------ benchmark

BenchCellResult run_bench_cell(const SynthSpec& base, const BenchCell& cell, Index trials,
                               const CodingConfig& coding, bool lasso_baseline,
                               std::uint64_t seed) {
  if (trials < 1) throw_invalid("trials must be >= 1");
  SynthSpec spec = base;
  spec.snr_db = cell.snr_db;
  spec.active_groups = cell.active_groups;
  spec.n = cell.n;
  spec.validate();
  CodingConfig cc = coding;
  cc.solver.lambda1 = cell.lambda1;
  cc.solver.lambda2_0 = cell.lambda2_0;

  BenchCellResult out;
  out.cell = cell;
  out.trials = trials;
  Index exact = 0, lasso_exact = 0;
  double ham = 0.0, lasso_ham = 0.0, iters = 0.0;
  for (Index t = 0; t < trials; ++t) {
    spec.seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    const GroupedSparseProblem prob = gen_grouped_sparse(spec);
    const auto start = std::chrono::steady_clock::now();
    const CodingOutcome c = code_collection(Method::kChilasso, prob.dict, prob.samples.data, cc);
    out.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const Index h = hamming(c.active, prob.truth);
    exact += h == 0 ? 1 : 0;
    ham += static_cast<double>(h);
    iters += c.iterations;
    if (lasso_baseline) {
      const CodingOutcome l = code_collection(Method::kLasso, prob.dict, prob.samples.data, cc);
      const Index hl = hamming(l.active, prob.truth);
      lasso_exact += hl == 0 ? 1 : 0;
      lasso_ham += static_cast<double>(hl);
    }
  }
  const auto n = static_cast<double>(trials);
  out.recovery_rate = static_cast<double>(exact) / n;
  out.mean_hamming = ham / n;
  out.mean_iterations = iters / n;
  if (lasso_baseline) {
    out.lasso_recovery_rate = static_cast<double>(lasso_exact) / n;
    out.lasso_mean_hamming = lasso_ham / n;
  }
  return out;
}

}  // namespace chl::harness

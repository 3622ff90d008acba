#pragma once

// Experiment orchestration behind the command-line tool: configuration,
// dictionary training, the audio identification and texture separation
// experiments, the synthetic benchmark and batch encoding.

#include "chilasso/audio.hpp"
#include "chilasso/identify.hpp"
#include "chilasso/model.hpp"
#include "chilasso/synth.hpp"
#include "chilasso/texture.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace chl::harness {

enum class Method { kChilasso, kLasso, kCglasso };
std::string method_name(Method m);

// Everything needed to code one collection of samples with any of the three
// methods and turn the result into a detection.
struct CodingConfig {
  SolverConfig solver;
  double lasso_lambda = 0.2;     // Lasso baseline weight
  double cglasso_lambda_0 = 0.04;  // C-GLasso base weight, scaled like lambda2_0
  DetectionConfig detection;
  // Divide each collection by its mean column norm before coding so the
  // weights do not depend on signal level.
  bool normalize_collection = true;
};

struct CodingOutcome {
  CoefficientMatrix codes;  // in the units of the scaled collection
  double scale = 1.0;       // collection was divided by this
  ActiveGroupSet active;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective per iteration when solver.record_trace
};

// Stock weights for collections normalized to unit mean column norm.
CodingConfig default_audio_coding();
CodingConfig default_texture_coding();
CodingConfig default_bench_coding();

CodingOutcome code_collection(Method method, const GroupedDictionary& dict,
                              const Eigen::MatrixXd& samples, const CodingConfig& cfg);

struct LearnParams {
  Index atom_count = 90;
  double lambda = 0.1;
  int epochs = 20;
  Index max_samples = 4000;  // random subset cap per class, 0 = all
  SolverConfig solver = [] {
    SolverConfig s;
    s.rel_tol = 1e-4;
    s.max_iters = 2000;
    return s;
  }();
};

// Columns are normalized to unit l2 before training; zero columns dropped.
GroupedDictionary learn_class_dictionary(const SampleMatrix& samples, const std::string& label,
                                         const LearnParams& params, std::uint64_t seed,
                                         std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------- audio

struct AudioClass {
  std::string label;
  AudioSignal signal;
};

struct AudioExperimentConfig {
  FeatureConfig features;
  double sample_rate = 16000.0;
  double train_fraction = 0.25;
  LearnParams learn;
  CodingConfig coding = default_audio_coding();
  double frame_seconds = 15.0;
  Index max_sources = 2;  // mixtures of 1..max_sources classes
  bool baselines = false;
  int jobs = 1;
  std::uint64_t seed = 0;
};

// Splits a class recording at train_fraction of its length.
std::pair<AudioSignal, AudioSignal> split_train_test(const AudioSignal& sig, double train_fraction);

std::vector<GroupedDictionary> learn_audio_dictionaries(const std::vector<AudioClass>& classes,
                                                        const AudioExperimentConfig& cfg,
                                                        std::vector<std::string>* warnings = nullptr);

struct TestItem {
  std::string name;
  AudioSignal signal;
  std::vector<Index> truth;  // class indices present
};

// Every combination of 1..max_sources test signals, summed sample-wise and
// truncated to the shortest member.
std::vector<TestItem> make_mixtures(const std::vector<AudioClass>& test_parts, Index max_sources);

// Feature columns grouped into non-overlapping frames of frame_seconds; a
// trailing partial frame is dropped. Frames without voiced columns are empty.
std::vector<SampleMatrix> split_frames(const SampleMatrix& features, double sample_rate,
                                       Index signal_length, double frame_seconds);

struct FrameDetection {
  std::string item;
  Index frame = 0;
  Method method = Method::kChilasso;
  Index n_columns = 0;
  ActiveGroupSet detected;
  ActiveGroupSet truth;
  Index hamming = 0;
  int iterations = 0;
  bool converged = false;
};

struct MethodSummary {
  Method method = Method::kChilasso;
  double mean_hamming = 0.0;
  double mean_hamming_single = 0.0;
  double mean_hamming_multi = 0.0;
  Index frames = 0;
};

struct AudioIdentifyResult {
  std::vector<FrameDetection> rows;
  std::vector<MethodSummary> summary;
};

AudioIdentifyResult run_audio_identification(const std::vector<TestItem>& items,
                                             const GroupedDictionary& dict,
                                             const AudioExperimentConfig& cfg);

// Five (or `count`) synthetic voices with distinct envelopes and f0 ranges.
std::vector<AudioClass> synthetic_audio_classes(Index count, double seconds, double fs,
                                                std::uint64_t seed);

// -------------------------------------------------------------- texture

struct TextureSource {
  std::string label;
  GrayImage image;
};

struct TextureExperimentConfig {
  PatchConfig patch = [] {
    PatchConfig p;
    p.center = true;
    return p;
  }();
  Index train_stride = 2;
  LearnParams learn = [] {
    LearnParams l;
    l.atom_count = 32;
    l.lambda = 0.05;
    l.epochs = 15;
    return l;
  }();
  CodingConfig coding = default_texture_coding();
  std::vector<double> mix_weights{0.5, 0.5};
  Index mix_count = 2;
  bool baselines = false;
  int jobs = 1;
  std::uint64_t seed = 0;
};

struct TextureComboResult {
  std::vector<Index> sources;
  Method method = Method::kChilasso;
  ActiveGroupSet detected;
  Index hamming = 0;
  std::vector<double> psnr;  // one per true source
  double apsnr = 0.0;
  std::vector<GrayImage> reconstructions;  // one per true source
  GrayImage mixture;
};

struct TextureMethodSummary {
  Method method = Method::kChilasso;
  double mean_hamming = 0.0;
  double apsnr = 0.0;
};

struct TextureExperimentResult {
  std::vector<GroupedDictionary> parts;
  std::vector<TextureComboResult> rows;
  std::vector<TextureMethodSummary> summary;
};

// Left halves train one sub-dictionary per source (unless `pretrained` is
// given), right halves are mixed for every combination of mix_count sources.
// Each reconstruction is scored against its weighted, mean-removed source
// when patches are centered, otherwise against the weighted source.
TextureExperimentResult run_texture_experiment(const std::vector<TextureSource>& sources,
                                               const TextureExperimentConfig& cfg,
                                               const std::vector<GroupedDictionary>* pretrained = nullptr);

// Four stock synthetic textures used by the tests and the default config.
std::vector<TextureSource> synthetic_textures(Index count, Index height, Index width,
                                              std::uint64_t seed);

// ------------------------------------------------------------ benchmark

struct BenchCell {
  double snr_db = 30.0;
  Index active_groups = 2;
  double lambda1 = 0.2;
  double lambda2_0 = 0.04;
  Index n = 64;
};

struct BenchCellResult {
  BenchCell cell;
  Index trials = 0;
  double recovery_rate = 0.0;  // exact group support
  double mean_hamming = 0.0;
  double mean_iterations = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> lasso_recovery_rate;
  std::optional<double> lasso_mean_hamming;
};

BenchCellResult run_bench_cell(const SynthSpec& base, const BenchCell& cell, Index trials,
                               const CodingConfig& coding, bool lasso_baseline,
                               std::uint64_t seed);

// --------------------------------------------------------------- driver

struct RunOptions {
  std::string mode;
  nlohmann::json config = nlohmann::json::object();
  std::filesystem::path config_dir;  // relative paths in the config resolve here
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  bool baselines = false;
  bool force = false;
  int jobs = 0;  // 0 keeps the config value
};

struct RunReport {
  int exit_code = 0;  // 0 ok, 1 error, 2 self-check failure
  std::vector<std::string> messages;
  nlohmann::json summary = nlohmann::json::object();
};

// Runs one mode, writing into a staging directory that replaces out_dir only
// on success. Existing output aborts the run unless force is set.
RunReport run(const RunOptions& opts);

// Configuration mapping, exposed for tests and the sidecar echo.
SolverConfig solver_from_json(const nlohmann::json& j, SolverConfig base = {});
nlohmann::json to_json(const SolverConfig& s);
FeatureConfig features_from_json(const nlohmann::json& j, FeatureConfig base = {});
nlohmann::json to_json(const FeatureConfig& f);
PatchConfig patch_from_json(const nlohmann::json& j, PatchConfig base = {});
nlohmann::json to_json(const PatchConfig& p);

}  // namespace chl::harness

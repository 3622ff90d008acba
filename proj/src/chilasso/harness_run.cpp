#include "chilasso/harness.hpp"

#include "chilasso/dict_learn.hpp"
#include "chilasso/error.hpp"
#include "chilasso/gdict.hpp"
#include "chilasso/io.hpp"
#include "chilasso/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unistd.h>

namespace chl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------- config mapping

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!j.is_object()) throw_invalid("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw_invalid("unknown key '" + key + "' in config section '" + section + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw_invalid(std::string("config key '") + key + "': " + e.what());
  }
}

// Numbers, or the strings "inf" / "-inf" which JSON cannot carry.
void read_real(const json& j, const char* key, double& target) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") target = std::numeric_limits<double>::infinity();
    else if (s == "-inf") target = -std::numeric_limits<double>::infinity();
    else throw_invalid(std::string("config key '") + key + "' must be a number");
    return;
  }
  if (!v.is_number()) throw_invalid(std::string("config key '") + key + "' must be a number");
  target = v.get<double>();
}

json real_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string window_name(WindowKind w) {
  switch (w) {
    case WindowKind::kHann: return "hann";
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kRectangular: return "rectangular";
  }
  return "hann";
}

WindowKind parse_window(const std::string& s) {
  if (s == "hann") return WindowKind::kHann;
  if (s == "hamming") return WindowKind::kHamming;
  if (s == "rectangular") return WindowKind::kRectangular;
  throw_invalid("unknown window '" + s + "'");
}

Method parse_method(const std::string& s) {
  if (s == "chilasso") return Method::kChilasso;
  if (s == "lasso") return Method::kLasso;
  if (s == "cglasso") return Method::kCglasso;
  throw_invalid("unknown method '" + s + "'");
}

}  // namespace

SolverConfig solver_from_json(const json& j, SolverConfig base) {
  check_keys(j, {"lambda1", "lambda2_0", "max_iters", "rel_tol", "deterministic", "lambda2_scaling"},
             "solver");
  read_real(j, "lambda1", base.lambda1);
  read_real(j, "lambda2_0", base.lambda2_0);
  read(j, "max_iters", base.max_iters);
  read_real(j, "rel_tol", base.rel_tol);
  read(j, "deterministic", base.deterministic);
  if (j.contains("lambda2_scaling")) {
    const auto s = j.at("lambda2_scaling").get<std::string>();
    if (s == "sqrt_group_size_times_samples") base.lambda2_scaling = Lambda2Scaling::kSqrtGroupSizeTimesSamples;
    else if (s == "none") base.lambda2_scaling = Lambda2Scaling::kNone;
    else throw_invalid("unknown lambda2_scaling '" + s + "'");
  }
  base.validate();
  return base;
}

json to_json(const SolverConfig& s) {
  return {{"lambda1", s.lambda1},
          {"lambda2_0", s.lambda2_0},
          {"max_iters", s.max_iters},
          {"rel_tol", s.rel_tol},
          {"deterministic", s.deterministic},
          {"lambda2_scaling", s.lambda2_scaling == Lambda2Scaling::kNone
                                  ? "none"
                                  : "sqrt_group_size_times_samples"}};
}

FeatureConfig features_from_json(const json& j, FeatureConfig base) {
  check_keys(j, {"frame_len", "overlap", "window", "emphasis_alpha", "n_coeffs", "voiced_energy_frac"},
             "features");
  read(j, "frame_len", base.frame_len);
  read_real(j, "overlap", base.overlap);
  if (j.contains("window")) base.window = parse_window(j.at("window").get<std::string>());
  if (j.contains("emphasis_alpha")) {
    if (j.at("emphasis_alpha").is_null()) base.emphasis_alpha.reset();
    else base.emphasis_alpha = j.at("emphasis_alpha").get<double>();
  }
  read(j, "n_coeffs", base.n_coeffs);
  read_real(j, "voiced_energy_frac", base.voiced_energy_frac);
  base.validate();
  return base;
}

json to_json(const FeatureConfig& f) {
  json j = {{"frame_len", f.frame_len},
            {"overlap", f.overlap},
            {"window", window_name(f.window)},
            {"n_coeffs", f.n_coeffs},
            {"voiced_energy_frac", f.voiced_energy_frac}};
  j["emphasis_alpha"] = f.emphasis_alpha ? json(*f.emphasis_alpha) : json(nullptr);
  return j;
}

PatchConfig patch_from_json(const json& j, PatchConfig base) {
  check_keys(j, {"patch", "stride", "center"}, "patch");
  read(j, "patch", base.patch);
  read(j, "stride", base.stride);
  read(j, "center", base.center);
  base.validate();
  return base;
}

json to_json(const PatchConfig& p) {
  return {{"patch", p.patch}, {"stride", p.stride}, {"center", p.center}};
}

namespace {

LearnParams learn_from_json(const json& j, LearnParams base, double* train_fraction) {
  check_keys(j, {"atom_count", "lambda", "epochs", "max_samples", "train_fraction", "solver"}, "learn");
  read(j, "atom_count", base.atom_count);
  read_real(j, "lambda", base.lambda);
  read(j, "epochs", base.epochs);
  read(j, "max_samples", base.max_samples);
  if (train_fraction) read_real(j, "train_fraction", *train_fraction);
  if (j.contains("solver")) base.solver = solver_from_json(j.at("solver"), base.solver);
  if (base.atom_count < 1) throw_invalid("learn.atom_count must be >= 1");
  if (!(base.lambda >= 0.0)) throw_invalid("learn.lambda must be >= 0");
  if (base.epochs < 1) throw_invalid("learn.epochs must be >= 1");
  if (base.max_samples < 0) throw_invalid("learn.max_samples must be >= 0");
  return base;
}

json learn_json(const LearnParams& l) {
  return {{"atom_count", l.atom_count},
          {"lambda", l.lambda},
          {"epochs", l.epochs},
          {"max_samples", l.max_samples},
          {"solver", to_json(l.solver)}};
}

json coding_json(const CodingConfig& c) {
  return {{"solver", to_json(c.solver)},
          {"lasso_lambda", c.lasso_lambda},
          {"cglasso_lambda_0", c.cglasso_lambda_0},
          {"detection", {{"rel_threshold", c.detection.rel_threshold}}},
          {"normalize_collection", c.normalize_collection}};
}

json synth_json(const SynthSpec& s) {
  return {{"m", s.m},
          {"groups", s.groups},
          {"group_size", s.group_size},
          {"active_groups", s.active_groups},
          {"atoms_per_group", s.atoms_per_group},
          {"snr_db", real_json(s.snr_db)},
          {"n", s.n}};
}

// ---------------------------------------------------------------- output

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Everything a mode needs while it runs: where to write, the resolved
// configuration, and the outcome of its self-checks.
struct Context {
  fs::path staging;
  fs::path config_dir;
  std::string mode;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool baselines = false;
  json resolved = json::object();
  json summary = json::object();
  std::vector<std::string> messages;
  std::vector<std::string> failures;
  std::vector<std::pair<std::string, std::vector<std::string>>> csvs;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : config_dir / path;
  }

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

class CsvWriter {
 public:
  CsvWriter(Context& ctx, const std::string& name, std::vector<std::string> header) {
    const fs::path path = ctx.staging / name;
    fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);
    if (!out_) throw_io("cannot create " + path.string());
    ctx.csvs.emplace_back(name, header);
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
    if (!out_) throw_io("write failed");
  }

 private:
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw_io("cannot write " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw_format(path.string() + ": " + e.what());
  }
}

std::string file_stem_for(const std::string& label) {
  std::string out;
  for (char c : label)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "_" : out;
}

// Numeric CSV with one header row; returns rows x columns.
Eigen::MatrixXd read_numeric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw_format(path.string() + ": empty file");
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
      double v = 0.0;
      const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
        throw_format(path.string() + ": non-numeric cell '" + cell + "'");
      row.push_back(v);
    }
    if (width == 0) width = row.size();
    if (row.size() != width) throw_format(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw_format(path.string() + ": no data rows");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

// One column per sample, header row of sample start times in seconds.
void write_feature_csv(Context& ctx, const std::string& name, const SampleMatrix& f, double fs) {
  std::vector<std::string> header;
  for (const auto& id : f.ids) header.push_back(format_real(static_cast<double>(id.first) / fs));
  CsvWriter csv(ctx, name, header);
  for (Index r = 0; r < f.rows(); ++r) {
    std::vector<std::string> row;
    for (Index c = 0; c < f.cols(); ++c) row.push_back(format_real(f.data(r, c)));
    csv.row(row);
  }
}

// ----------------------------------------------------------- config parts

CodingConfig coding_from_json(const json& cfg, CodingConfig base) {
  if (cfg.contains("solver")) base.solver = solver_from_json(cfg.at("solver"), base.solver);
  read_real(cfg, "lasso_lambda", base.lasso_lambda);
  read_real(cfg, "cglasso_lambda_0", base.cglasso_lambda_0);
  read(cfg, "normalize_collection", base.normalize_collection);
  if (cfg.contains("detection")) {
    check_keys(cfg.at("detection"), {"rel_threshold"}, "detection");
    read_real(cfg.at("detection"), "rel_threshold", base.detection.rel_threshold);
  }
  base.detection.validate();
  if (!(base.lasso_lambda >= 0.0)) throw_invalid("lasso_lambda must be >= 0");
  if (!(base.cglasso_lambda_0 >= 0.0)) throw_invalid("cglasso_lambda_0 must be >= 0");
  return base;
}

std::vector<AudioClass> load_audio_classes(const json& cfg, Context& ctx, double sample_rate) {
  std::vector<AudioClass> classes;
  if (cfg.contains("classes")) {
    json resolved = json::array();
    for (const auto& c : cfg.at("classes")) {
      check_keys(c, {"label", "path", "paths"}, "classes[]");
      AudioClass ac;
      ac.label = c.at("label").get<std::string>();
      ac.signal.sample_rate = sample_rate;
      std::vector<std::string> paths;
      if (c.contains("path")) paths.push_back(c.at("path").get<std::string>());
      if (c.contains("paths"))
        for (const auto& p : c.at("paths")) paths.push_back(p.get<std::string>());
      if (paths.empty()) throw_invalid("class '" + ac.label + "' lists no audio files");
      json rp = json::array();
      for (const auto& p : paths) {
        const fs::path full = ctx.resolve(p);
        if (!fs::exists(full)) throw_io("missing input " + full.string());
        AudioSignal s = read_wav(full);
        if (s.sample_rate != sample_rate) s = resample(s, sample_rate);
        ac.signal.samples.insert(ac.signal.samples.end(), s.samples.begin(), s.samples.end());
        rp.push_back(full.string());
      }
      if (ac.signal.samples.empty()) throw_invalid("class '" + ac.label + "' is empty");
      resolved.push_back({{"label", ac.label}, {"paths", rp}});
      classes.push_back(std::move(ac));
    }
    ctx.resolved["classes"] = resolved;
  } else {
    Index count = 5;
    double seconds = 20.0;
    json s = cfg.value("synthetic_audio", json::object());
    check_keys(s, {"count", "seconds"}, "synthetic_audio");
    read(s, "count", count);
    read_real(s, "seconds", seconds);
    classes = synthetic_audio_classes(count, seconds, sample_rate, ctx.seed);
    ctx.resolved["synthetic_audio"] = {{"count", count}, {"seconds", seconds}};
  }
  if (classes.empty()) throw_invalid("no audio classes configured");
  return classes;
}

std::vector<TextureSource> load_textures(const json& cfg, Context& ctx) {
  std::vector<TextureSource> out;
  if (cfg.contains("textures")) {
    json resolved = json::array();
    for (const auto& t : cfg.at("textures")) {
      check_keys(t, {"label", "path"}, "textures[]");
      const fs::path full = ctx.resolve(t.at("path").get<std::string>());
      if (!fs::exists(full)) throw_io("missing input " + full.string());
      out.push_back({t.at("label").get<std::string>(), read_image(full)});
      resolved.push_back({{"label", out.back().label}, {"path", full.string()}});
    }
    ctx.resolved["textures"] = resolved;
  } else {
    Index count = 4, height = 64, width = 128;
    json s = cfg.value("synthetic_textures", json::object());
    check_keys(s, {"count", "height", "width"}, "synthetic_textures");
    read(s, "count", count);
    read(s, "height", height);
    read(s, "width", width);
    out = synthetic_textures(count, height, width, ctx.seed);
    ctx.resolved["synthetic_textures"] = {{"count", count}, {"height", height}, {"width", width}};
  }
  if (out.empty()) throw_invalid("no textures configured");
  return out;
}

std::vector<GroupedDictionary> load_manifest(const fs::path& dir) {
  const json m = read_json_file(dir / "manifest.json");
  std::vector<GroupedDictionary> parts;
  for (const auto& d : m.at("dictionaries")) {
    GroupedDictionary full = load_gdict(dir / d.at("file").get<std::string>());
    if (full.group_count() != 1) throw_format("manifest entries must be single-group dictionaries");
    parts.push_back(std::move(full));
  }
  if (parts.empty()) throw_format(dir.string() + ": manifest lists no dictionaries");
  return parts;
}

void save_parts(Context& ctx, const std::vector<GroupedDictionary>& parts, const std::string& kind) {
  json list = json::array();
  CsvWriter csv(ctx, "dictionaries.csv", {"label", "file", "rows", "atoms"});
  std::set<std::string> seen;
  for (const auto& d : parts) {
    std::string stem = file_stem_for(d.label(0));
    while (!seen.insert(stem).second) stem += "_";
    const std::string file = stem + ".gdict";
    save_gdict(d, ctx.staging / file);
    list.push_back({{"label", d.label(0)}, {"file", file}, {"rows", d.rows()}, {"atoms", d.cols()}});
    csv.row({d.label(0), file, std::to_string(d.rows()), std::to_string(d.cols())});
    const Eigen::VectorXd norms = d.atoms().colwise().norm().transpose();
    ctx.check(d.atoms().allFinite() && (norms.array() - 1.0).abs().maxCoeff() <= 1e-9,
              "dictionary '" + d.label(0) + "' atoms are not finite unit vectors");
  }
  write_text(ctx.staging / "manifest.json",
             json{{"kind", kind}, {"dictionaries", list}}.dump(2) + "\n");
}

// ------------------------------------------------------------------ modes

struct AudioSetup {
  AudioExperimentConfig exp;
  std::vector<AudioClass> classes;
};

AudioSetup audio_setup(const json& cfg, Context& ctx) {
  AudioSetup s;
  s.exp.coding = coding_from_json(cfg, default_audio_coding());
  if (cfg.contains("features")) s.exp.features = features_from_json(cfg.at("features"));
  read_real(cfg, "sample_rate", s.exp.sample_rate);
  if (!(s.exp.sample_rate > 0.0)) throw_invalid("sample_rate must be > 0");
  if (cfg.contains("learn")) s.exp.learn = learn_from_json(cfg.at("learn"), s.exp.learn, &s.exp.train_fraction);
  if (!(s.exp.train_fraction > 0.0 && s.exp.train_fraction < 1.0))
    throw_invalid("learn.train_fraction must be in (0, 1)");
  read_real(cfg, "frame_seconds", s.exp.frame_seconds);
  if (!(s.exp.frame_seconds > 0.0)) throw_invalid("frame_seconds must be > 0");
  read(cfg, "max_sources", s.exp.max_sources);
  s.exp.baselines = ctx.baselines;
  s.exp.jobs = ctx.jobs;
  s.exp.seed = ctx.seed;
  s.classes = load_audio_classes(cfg, ctx, s.exp.sample_rate);

  ctx.resolved["coding"] = coding_json(s.exp.coding);
  ctx.resolved["features"] = to_json(s.exp.features);
  ctx.resolved["sample_rate"] = s.exp.sample_rate;
  json learn = learn_json(s.exp.learn);
  learn["train_fraction"] = s.exp.train_fraction;
  ctx.resolved["learn"] = learn;
  ctx.resolved["frame_seconds"] = s.exp.frame_seconds;
  ctx.resolved["max_sources"] = s.exp.max_sources;
  return s;
}

struct TextureSetup {
  TextureExperimentConfig exp;
  std::vector<TextureSource> sources;
};

TextureSetup texture_setup(const json& cfg, Context& ctx) {
  TextureSetup s;
  s.exp.coding = coding_from_json(cfg, default_texture_coding());
  if (cfg.contains("patch")) s.exp.patch = patch_from_json(cfg.at("patch"), s.exp.patch);
  read(cfg, "train_stride", s.exp.train_stride);
  if (s.exp.train_stride < 1) throw_invalid("train_stride must be >= 1");
  if (cfg.contains("learn")) s.exp.learn = learn_from_json(cfg.at("learn"), s.exp.learn, nullptr);
  read(cfg, "mix_weights", s.exp.mix_weights);
  read(cfg, "mix_count", s.exp.mix_count);
  if (!cfg.contains("mix_weights") && s.exp.mix_count > 0)
    s.exp.mix_weights.assign(static_cast<std::size_t>(s.exp.mix_count), 1.0 / static_cast<double>(s.exp.mix_count));
  s.exp.baselines = ctx.baselines;
  s.exp.jobs = ctx.jobs;
  s.exp.seed = ctx.seed;
  s.sources = load_textures(cfg, ctx);

  ctx.resolved["coding"] = coding_json(s.exp.coding);
  ctx.resolved["patch"] = to_json(s.exp.patch);
  ctx.resolved["train_stride"] = s.exp.train_stride;
  ctx.resolved["learn"] = learn_json(s.exp.learn);
  ctx.resolved["mix_weights"] = s.exp.mix_weights;
  ctx.resolved["mix_count"] = s.exp.mix_count;
  return s;
}

void mode_learn_dict(const json& cfg, Context& ctx) {
  std::vector<GroupedDictionary> parts;
  std::vector<std::string> warnings;
  std::string kind;
  if (cfg.contains("textures") || cfg.contains("synthetic_textures")) {
    kind = "texture";
    TextureSetup s = texture_setup(cfg, ctx);
    PatchConfig train = s.exp.patch;
    train.stride = s.exp.train_stride;
    std::vector<std::optional<GroupedDictionary>> learned(s.sources.size());
    parallel_for(s.sources.size(), ctx.jobs, [&](std::size_t i) {
      const GrayImage& img = s.sources[i].image;
      const GrayImage left{img.pixels.leftCols(img.width() / 2), img.provenance};
      learned[i] = learn_class_dictionary(extract_patches(left, train), s.sources[i].label,
                                          s.exp.learn, derive_seed(ctx.seed, i));
    });
    for (auto& d : learned) parts.push_back(std::move(*d));
  } else {
    kind = "audio";
    AudioSetup s = audio_setup(cfg, ctx);
    parts = learn_audio_dictionaries(s.classes, s.exp, &warnings);
  }
  concat_dictionaries(parts);  // rejects duplicate labels and mismatched rows
  save_parts(ctx, parts, kind);
  for (const auto& w : warnings) ctx.messages.push_back("warning: " + w);
  ctx.summary = {{"dictionaries", parts.size()}, {"kind", kind}};
}

void mode_audio_identify(const json& cfg, Context& ctx) {
  AudioSetup s = audio_setup(cfg, ctx);
  std::vector<GroupedDictionary> parts;
  std::vector<std::string> warnings;
  if (cfg.contains("dictionaries")) {
    const fs::path dir = ctx.resolve(cfg.at("dictionaries").get<std::string>());
    parts = load_manifest(dir);
    ctx.resolved["dictionaries"] = dir.string();
    if (parts.size() != s.classes.size())
      throw_dimension("dictionaries", std::to_string(parts.size()) + " dictionaries for " +
                                          std::to_string(s.classes.size()) + " classes");
  } else {
    parts = learn_audio_dictionaries(s.classes, s.exp, &warnings);
  }
  const GroupedDictionary dict = concat_dictionaries(parts);
  if (dict.rows() != s.exp.features.n_coeffs)
    throw_dimension("dictionaries", std::to_string(dict.rows()) + " rows for " +
                                        std::to_string(s.exp.features.n_coeffs) + " coefficients");
  save_gdict(dict, ctx.staging / "dictionary.gdict");

  std::vector<AudioClass> test_parts;
  for (const auto& c : s.classes)
    test_parts.push_back({c.label, split_train_test(c.signal, s.exp.train_fraction).second});
  const auto items = make_mixtures(test_parts, s.exp.max_sources);
  const AudioIdentifyResult res = run_audio_identification(items, dict, s.exp);

  bool export_features = false;
  read(cfg, "export_features", export_features);
  ctx.resolved["export_features"] = export_features;
  if (export_features) {
    fs::create_directories(ctx.staging / "features");
    for (const auto& item : items)
      write_feature_csv(ctx, "features/" + file_stem_for(item.name) + ".csv",
                        extract_features(item.signal, s.exp.features), item.signal.sample_rate);
  }

  std::vector<std::string> header{"item", "frame_id", "method", "n_columns"};
  for (Index g = 0; g < dict.group_count(); ++g) header.push_back("energy_" + dict.label(g));
  for (Index g = 0; g < dict.group_count(); ++g) header.push_back("flag_" + dict.label(g));
  for (Index g = 0; g < dict.group_count(); ++g) header.push_back("truth_" + dict.label(g));
  header.insert(header.end(), {"hamming", "iterations", "converged"});
  CsvWriter det(ctx, "detections.csv", header);
  for (const auto& r : res.rows) {
    std::vector<std::string> row{r.item, std::to_string(r.frame), method_name(r.method),
                                 std::to_string(r.n_columns)};
    for (double e : r.detected.energies) row.push_back(format_real(e));
    for (bool f : r.detected.flags) row.push_back(f ? "1" : "0");
    for (bool f : r.truth.flags) row.push_back(f ? "1" : "0");
    row.insert(row.end(), {std::to_string(r.hamming), std::to_string(r.iterations),
                           r.converged ? "1" : "0"});
    det.row(row);
    ctx.check(r.hamming == hamming(r.detected, r.truth) && r.hamming <= dict.group_count(),
              "hamming out of range for " + r.item);
    ctx.check(std::all_of(r.detected.energies.begin(), r.detected.energies.end(),
                          [](double e) { return std::isfinite(e) && e >= 0.0; }),
              "non-finite group energy for " + r.item);
  }
  ctx.check(!res.rows.empty(), "no complete frames: recordings are shorter than frame_seconds");

  CsvWriter sum(ctx, "summary.csv", {"method", "frames", "mean_hamming", "mean_hamming_single", "mean_hamming_multi"});
  json js = json::array();
  for (const auto& m : res.summary) {
    sum.row({method_name(m.method), std::to_string(m.frames), format_real(m.mean_hamming),
             format_real(m.mean_hamming_single), format_real(m.mean_hamming_multi)});
    js.push_back({{"method", method_name(m.method)}, {"frames", m.frames}, {"mean_hamming", m.mean_hamming}});
  }
  for (const auto& w : warnings) ctx.messages.push_back("warning: " + w);
  ctx.summary = {{"items", items.size()}, {"methods", js}};
}

void mode_texture_separate(const json& cfg, Context& ctx) {
  TextureSetup s = texture_setup(cfg, ctx);
  std::optional<std::vector<GroupedDictionary>> pre;
  if (cfg.contains("dictionaries")) {
    const fs::path dir = ctx.resolve(cfg.at("dictionaries").get<std::string>());
    pre = load_manifest(dir);
    ctx.resolved["dictionaries"] = dir.string();
  }
  const TextureExperimentResult res = run_texture_experiment(s.sources, s.exp, pre ? &*pre : nullptr);
  const GroupedDictionary dict = concat_dictionaries(res.parts);
  save_gdict(dict, ctx.staging / "dictionary.gdict");
  const Index g_count = dict.group_count();

  fs::create_directories(ctx.staging / "images");
  // Centered reconstructions are zero mean; they are shifted to mid-gray for viewing.
  const double offset = s.exp.patch.center ? 128.0 : 0.0;
  std::vector<std::string> header{"combo", "sources", "method", "hamming"};
  for (Index k = 0; k < s.exp.mix_count; ++k) header.push_back("psnr_" + std::to_string(k + 1));
  header.push_back("apsnr");
  for (Index g = 0; g < g_count; ++g) header.push_back("flag_" + dict.label(g));
  CsvWriter scores(ctx, "scores.csv", header);

  const std::size_t per_combo = s.exp.baselines ? 3 : 1;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    const std::size_t combo = i / per_combo;
    std::string names;
    for (Index src : r.sources) names += (names.empty() ? "" : "+") + s.sources[static_cast<std::size_t>(src)].label;
    const std::string tag = "c" + std::to_string(combo);
    if (i % per_combo == 0) write_pgm(r.mixture, ctx.staging / "images" / (tag + "_mix.pgm"));
    for (const auto& img : r.reconstructions) {
      GrayImage shown{img.pixels.array() + offset, img.provenance};
      write_pgm(shown, ctx.staging / "images" /
                           (tag + "_" + method_name(r.method) + "_" + file_stem_for(img.provenance) + ".pgm"));
      ctx.check(img.pixels.allFinite(), "non-finite reconstruction in combination " + names);
    }
    std::vector<std::string> row{std::to_string(combo), names, method_name(r.method), std::to_string(r.hamming)};
    for (double p : r.psnr) row.push_back(format_real(p));
    row.push_back(format_real(r.apsnr));
    for (bool f : r.detected.flags) row.push_back(f ? "1" : "0");
    scores.row(row);
    ctx.check(r.hamming <= g_count, "hamming out of range in combination " + names);
    ctx.check(std::none_of(r.psnr.begin(), r.psnr.end(), [](double p) { return std::isnan(p); }),
              "PSNR is NaN in combination " + names);
  }

  CsvWriter sum(ctx, "summary.csv", {"method", "combinations", "mean_hamming", "apsnr"});
  json js = json::array();
  for (const auto& m : res.summary) {
    const std::size_t n = res.rows.size() / per_combo;
    sum.row({method_name(m.method), std::to_string(n), format_real(m.mean_hamming), format_real(m.apsnr)});
    js.push_back({{"method", method_name(m.method)}, {"mean_hamming", m.mean_hamming}, {"apsnr", real_json(m.apsnr)}});
  }
  ctx.summary = {{"combinations", res.rows.size() / per_combo}, {"methods", js}};
}

void mode_synth_bench(const json& cfg, Context& ctx) {
  const CodingConfig coding = coding_from_json(cfg, default_bench_coding());
  SynthSpec base;
  if (cfg.contains("synth")) {
    const json& j = cfg.at("synth");
    check_keys(j, {"m", "groups", "group_size", "active_groups", "atoms_per_group", "snr_db", "n"}, "synth");
    read(j, "m", base.m);
    read(j, "groups", base.groups);
    read(j, "group_size", base.group_size);
    read(j, "active_groups", base.active_groups);
    read(j, "atoms_per_group", base.atoms_per_group);
    read_real(j, "snr_db", base.snr_db);
    read(j, "n", base.n);
  }
  base.validate();
  Index trials = 20;
  read(cfg, "trials", trials);
  if (trials < 1) throw_invalid("trials must be >= 1");

  std::vector<double> snrs{base.snr_db}, l1s{coding.solver.lambda1}, l2s{coding.solver.lambda2_0};
  std::vector<Index> actives{base.active_groups}, ns{base.n};
  if (cfg.contains("sweep")) {
    const json& sw = cfg.at("sweep");
    check_keys(sw, {"snr_db", "active_groups", "lambda1", "lambda2_0", "n"}, "sweep");
    if (sw.contains("snr_db")) {
      snrs.clear();
      for (const auto& v : sw.at("snr_db")) {
        double x = 0.0;
        read_real(json{{"v", v}}, "v", x);
        snrs.push_back(x);
      }
    }
    read(sw, "active_groups", actives);
    read(sw, "lambda1", l1s);
    read(sw, "lambda2_0", l2s);
    read(sw, "n", ns);
  }
  std::vector<BenchCell> cells;
  for (double snr : snrs)
    for (Index a : actives)
      for (double l1 : l1s)
        for (double l2 : l2s)
          for (Index n : ns) cells.push_back({snr, a, l1, l2, n});
  if (cells.empty()) throw_invalid("sweep produces no cells");

  std::vector<std::optional<BenchCellResult>> results(cells.size());
  parallel_for(cells.size(), ctx.jobs, [&](std::size_t i) {
    results[i] = run_bench_cell(base, cells[i], trials, coding, ctx.baselines, derive_seed(ctx.seed, i));
  });

  std::vector<std::string> header{"snr_db", "active_groups", "lambda1", "lambda2_0", "n", "trials",
                                  "recovery_rate", "mean_hamming", "mean_iterations", "wall_seconds"};
  if (ctx.baselines) header.insert(header.end(), {"lasso_recovery_rate", "lasso_mean_hamming"});
  CsvWriter csv(ctx, "bench.csv", header);
  json js = json::array();
  for (const auto& opt : results) {
    const BenchCellResult& r = *opt;
    std::vector<std::string> row{format_real(r.cell.snr_db), std::to_string(r.cell.active_groups),
                                 format_real(r.cell.lambda1), format_real(r.cell.lambda2_0),
                                 std::to_string(r.cell.n), std::to_string(r.trials),
                                 format_real(r.recovery_rate), format_real(r.mean_hamming),
                                 format_real(r.mean_iterations), format_real(r.wall_seconds)};
    if (r.lasso_recovery_rate) row.insert(row.end(), {format_real(*r.lasso_recovery_rate), format_real(*r.lasso_mean_hamming)});
    csv.row(row);
    ctx.check(r.recovery_rate >= 0.0 && r.recovery_rate <= 1.0, "recovery rate outside [0, 1]");
    ctx.check(r.mean_hamming >= 0.0 && r.mean_hamming <= static_cast<double>(base.groups),
              "mean hamming outside [0, G]");
    js.push_back({{"snr_db", real_json(r.cell.snr_db)}, {"n", r.cell.n}, {"recovery_rate", r.recovery_rate},
                  {"mean_hamming", r.mean_hamming}});
  }
  ctx.resolved["coding"] = coding_json(coding);
  ctx.resolved["synth"] = synth_json(base);
  ctx.resolved["trials"] = trials;
  json rs = json::array();
  for (double v : snrs) rs.push_back(real_json(v));
  ctx.resolved["sweep"] = {{"snr_db", rs}, {"active_groups", actives}, {"lambda1", l1s},
                           {"lambda2_0", l2s}, {"n", ns}};
  ctx.summary = {{"cells", js}};
}

void mode_encode(const json& cfg, Context& ctx) {
  if (!cfg.contains("encode")) throw_invalid("encode mode needs an 'encode' section");
  const json& e = cfg.at("encode");
  check_keys(e, {"dictionary", "input", "method"}, "encode");
  CodingConfig coding = coding_from_json(cfg, default_audio_coding());
  coding.solver.record_trace = true;
  const fs::path dict_path = ctx.resolve(e.at("dictionary").get<std::string>());
  const fs::path input = ctx.resolve(e.at("input").get<std::string>());
  const Method method = parse_method(e.value("method", std::string("chilasso")));
  if (!fs::exists(dict_path)) throw_io("missing input " + dict_path.string());
  if (!fs::exists(input)) throw_io("missing input " + input.string());
  const GroupedDictionary dict = load_gdict(dict_path);

  std::string ext = input.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  SampleMatrix x;
  if (ext == ".wav") {
    FeatureConfig fc;
    if (cfg.contains("features")) fc = features_from_json(cfg.at("features"));
    x = extract_features(read_wav(input), fc);
    ctx.resolved["features"] = to_json(fc);
  } else if (ext == ".pgm" || ext == ".png") {
    PatchConfig pc;
    if (cfg.contains("patch")) pc = patch_from_json(cfg.at("patch"));
    x = extract_patches(read_image(input), pc);
    ctx.resolved["patch"] = to_json(pc);
  } else {
    x = make_samples(read_numeric_csv(input));
  }
  const CodingOutcome c = code_collection(method, dict, x.data, coding);

  std::vector<std::string> header{"atom", "group"};
  for (Index j = 0; j < c.codes.cols(); ++j) header.push_back("s" + std::to_string(j));
  CsvWriter codes(ctx, "codes.csv", header);
  for (Index g = 0; g < dict.group_count(); ++g) {
    const GroupSpan& s = dict.groups()[g];
    for (Index k = s.start; k < s.end(); ++k) {
      std::vector<std::string> row{std::to_string(k), dict.label(g)};
      for (Index j = 0; j < c.codes.cols(); ++j) row.push_back(format_real(c.codes(k, j) * c.scale));
      codes.row(row);
    }
  }
  CsvWriter active(ctx, "active.csv", {"group", "label", "energy", "active"});
  for (Index g = 0; g < dict.group_count(); ++g)
    active.row({std::to_string(g), dict.label(g),
                format_real(c.active.energies[static_cast<std::size_t>(g)] * c.scale),
                c.active.flags[static_cast<std::size_t>(g)] ? "1" : "0"});
  CsvWriter trace(ctx, "trace.csv", {"iteration", "objective"});
  for (std::size_t i = 0; i < c.trace.size(); ++i) trace.row({std::to_string(i + 1), format_real(c.trace[i])});

  ctx.check(c.codes.allFinite(), "codes are not finite");
  for (std::size_t i = 1; i < c.trace.size(); ++i)
    ctx.check(c.trace[i] <= c.trace[i - 1] * (1.0 + 1e-12) + 1e-300, "objective increased at iteration " + std::to_string(i + 1));
  ctx.resolved["coding"] = coding_json(coding);
  ctx.resolved["encode"] = {{"dictionary", dict_path.string()}, {"input", input.string()}, {"method", method_name(method)}};
  ctx.summary = {{"samples", c.codes.cols()}, {"iterations", c.iterations}, {"converged", c.converged},
                 {"active", c.active.active_indices()}};
}

}  // namespace

RunReport run(const RunOptions& opts) {
  RunReport report;
  static const std::set<std::string> modes{"learn-dict", "audio-identify", "texture-separate",
                                           "synth-bench", "encode"};
  Context ctx;
  ctx.config_dir = opts.config_dir.empty() ? fs::current_path() : opts.config_dir;
  try {
    const json& cfg = opts.config;
    check_keys(cfg, {"mode", "seed", "jobs", "baselines", "solver", "lasso_lambda", "cglasso_lambda_0",
                     "normalize_collection", "detection", "features", "sample_rate", "learn",
                     "frame_seconds", "max_sources", "classes", "synthetic_audio", "dictionaries",
                     "export_features", "patch", "train_stride", "textures", "synthetic_textures",
                     "mix_weights", "mix_count", "synth", "sweep", "trials", "encode"},
               "top level");
    ctx.mode = opts.mode.empty() ? cfg.value("mode", std::string()) : opts.mode;
    if (!modes.count(ctx.mode)) throw_invalid("unknown or missing mode '" + ctx.mode + "'");
    read(cfg, "seed", ctx.seed);
    if (opts.seed) ctx.seed = *opts.seed;
    read(cfg, "jobs", ctx.jobs);
    if (opts.jobs > 0) ctx.jobs = opts.jobs;
    if (ctx.jobs < 1) throw_invalid("jobs must be >= 1");
    read(cfg, "baselines", ctx.baselines);
    ctx.baselines = ctx.baselines || opts.baselines;

    if (opts.out_dir.empty()) throw_invalid("no output directory given");
    const fs::path out = fs::absolute(opts.out_dir).lexically_normal();
    if (fs::exists(out) && !opts.force)
      throw_io("output " + out.string() + " exists; use --force to replace it");
    fs::create_directories(out.parent_path());
    ctx.staging = out.parent_path() / ("." + out.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(ctx.staging);
    fs::create_directories(ctx.staging);

    try {
      if (ctx.mode == "learn-dict") mode_learn_dict(cfg, ctx);
      else if (ctx.mode == "audio-identify") mode_audio_identify(cfg, ctx);
      else if (ctx.mode == "texture-separate") mode_texture_separate(cfg, ctx);
      else if (ctx.mode == "synth-bench") mode_synth_bench(cfg, ctx);
      else mode_encode(cfg, ctx);

      ctx.resolved["mode"] = ctx.mode;
      ctx.resolved["seed"] = ctx.seed;
      ctx.resolved["jobs"] = ctx.jobs;
      ctx.resolved["baselines"] = ctx.baselines;
      for (const auto& [name, columns] : ctx.csvs) {
        const json side{{"file", fs::path(name).filename().string()},
                        {"columns", columns},
                        {"mode", ctx.mode},
                        {"seed", ctx.seed},
                        {"version", CHILASSO_VERSION},
                        {"config", ctx.resolved}};
        fs::path p = ctx.staging / name;
        p.replace_extension(".json");
        write_text(p, side.dump(2) + "\n");
      }
      const json run_json{{"mode", ctx.mode}, {"seed", ctx.seed}, {"version", CHILASSO_VERSION},
                          {"config", ctx.resolved}, {"summary", ctx.summary},
                          {"self_check_failures", ctx.failures}};
      write_text(ctx.staging / "run.json", run_json.dump(2) + "\n");

      if (fs::exists(out)) fs::remove_all(out);
      fs::rename(ctx.staging, out);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(ctx.staging, ec);
      throw;
    }
    report.summary = ctx.summary;
    report.messages = ctx.messages;
    for (const auto& f : ctx.failures) report.messages.push_back("self-check failed: " + f);
    report.exit_code = ctx.failures.empty() ? 0 : 2;
  } catch (const std::exception& e) {
    report.messages = ctx.messages;
    report.messages.push_back(std::string("error: ") + e.what());
    report.exit_code = 1;
  }
  return report;
}

}  // namespace chl::harness

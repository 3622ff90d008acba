#include "chilasso/chilasso.h"

#include "chilasso/audio.hpp"
#include "chilasso/dict_learn.hpp"
#include "chilasso/error.hpp"
#include "chilasso/gdict.hpp"
#include "chilasso/harness.hpp"
#include "chilasso/identify.hpp"
#include "chilasso/prox.hpp"
#include "chilasso/solvers.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

struct chl_dictionary {
  chl::GroupedDictionary dict;
};

namespace {

thread_local std::string g_last_error;

chl_status to_status(chl::ErrorCode code) {
  switch (code) {
    case chl::ErrorCode::kInvalidArgument: return CHL_ERR_INVALID_ARGUMENT;
    case chl::ErrorCode::kDimensionMismatch: return CHL_ERR_DIMENSION;
    case chl::ErrorCode::kIo: return CHL_ERR_IO;
    case chl::ErrorCode::kFormat: return CHL_ERR_FORMAT;
    case chl::ErrorCode::kNumeric: return CHL_ERR_NUMERIC;
    case chl::ErrorCode::kInternal: return CHL_ERR_INTERNAL;
  }
  return CHL_ERR_INTERNAL;
}

chl_status fail(chl_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs body, translating exceptions into status codes at the boundary.
template <typename F>
chl_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return CHL_OK;
  } catch (const chl::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CHL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CHL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CHL_ERR_INTERNAL, "unknown error");
  }
}

#define CHL_REQUIRE(ptr)                                                   \
  do {                                                                     \
    if (!(ptr)) return fail(CHL_ERR_NULL_POINTER, #ptr " is NULL");        \
  } while (0)

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

chl::Index as_index(size_t v) { return static_cast<chl::Index>(v); }

chl::SolverConfig to_solver(const chl_solver_config* cfg) {
  chl::SolverConfig s;
  if (!cfg) return s;
  s.lambda1 = cfg->lambda1;
  s.lambda2_0 = cfg->lambda2_0;
  s.max_iters = cfg->max_iters;
  s.rel_tol = cfg->rel_tol;
  s.deterministic = cfg->deterministic != 0;
  switch (cfg->lambda2_scaling) {
    case CHL_LAMBDA2_SQRT_GROUP_SIZE_TIMES_SAMPLES:
      s.lambda2_scaling = chl::Lambda2Scaling::kSqrtGroupSizeTimesSamples;
      break;
    case CHL_LAMBDA2_NONE:
      s.lambda2_scaling = chl::Lambda2Scaling::kNone;
      break;
    default:
      chl::throw_invalid("unknown lambda2_scaling");
  }
  return s;
}

chl::GroupPartition partition(const size_t* sizes, size_t count) {
  if (!sizes && count > 0) chl::throw_invalid("group_sizes is NULL");
  std::vector<chl::Index> s(count);
  for (size_t i = 0; i < count; ++i) s[i] = as_index(sizes[i]);
  return chl::GroupPartition::from_sizes(s);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* chl_version(void) { return CHILASSO_VERSION; }

const char* chl_status_string(chl_status status) {
  switch (status) {
    case CHL_OK: return "ok";
    case CHL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CHL_ERR_DIMENSION: return "dimension mismatch";
    case CHL_ERR_IO: return "i/o error";
    case CHL_ERR_FORMAT: return "format error";
    case CHL_ERR_NUMERIC: return "numeric error";
    case CHL_ERR_INTERNAL: return "internal error";
    case CHL_ERR_NULL_POINTER: return "null pointer";
  }
  return "unknown status";
}

const char* chl_last_error(void) { return g_last_error.c_str(); }

void chl_buffer_free(void* buffer) { std::free(buffer); }

chl_status chl_dictionary_create(const double* atoms, size_t rows, size_t cols,
                                 const size_t* group_sizes, size_t group_count,
                                 const char* const* labels, int normalize, chl_dictionary** out) {
  CHL_REQUIRE(out);
  *out = nullptr;
  CHL_REQUIRE(atoms);
  return guarded([&] {
    Eigen::MatrixXd a = ConstMap(atoms, as_index(rows), as_index(cols));
    std::vector<std::string> names;
    for (size_t g = 0; g < group_count; ++g) {
      if (labels && !labels[g]) chl::throw_invalid("label " + std::to_string(g) + " is NULL");
      names.push_back(labels ? labels[g] : "g" + std::to_string(g));
    }
    auto groups = partition(group_sizes, group_count);
    *out = new chl_dictionary{normalize ? chl::GroupedDictionary::normalized(std::move(a), std::move(groups), std::move(names))
                                        : chl::GroupedDictionary(std::move(a), std::move(groups), std::move(names))};
  });
}

chl_status chl_dictionary_load(const char* path, chl_dictionary** out) {
  CHL_REQUIRE(out);
  *out = nullptr;
  CHL_REQUIRE(path);
  return guarded([&] { *out = new chl_dictionary{chl::load_gdict(path)}; });
}

chl_status chl_dictionary_save(const chl_dictionary* dict, const char* path) {
  CHL_REQUIRE(dict);
  CHL_REQUIRE(path);
  return guarded([&] { chl::save_gdict(dict->dict, path); });
}

chl_status chl_dictionary_concat(const chl_dictionary* const* parts, size_t count,
                                 chl_dictionary** out) {
  CHL_REQUIRE(out);
  *out = nullptr;
  CHL_REQUIRE(parts);
  return guarded([&] {
    std::vector<chl::GroupedDictionary> list;
    for (size_t i = 0; i < count; ++i) {
      if (!parts[i]) chl::throw_invalid("part " + std::to_string(i) + " is NULL");
      list.push_back(parts[i]->dict);
    }
    *out = new chl_dictionary{chl::concat_dictionaries(list)};
  });
}

void chl_dictionary_free(chl_dictionary* dict) { delete dict; }

size_t chl_dictionary_rows(const chl_dictionary* dict) {
  return dict ? static_cast<size_t>(dict->dict.rows()) : 0;
}

size_t chl_dictionary_cols(const chl_dictionary* dict) {
  return dict ? static_cast<size_t>(dict->dict.cols()) : 0;
}

size_t chl_dictionary_group_count(const chl_dictionary* dict) {
  return dict ? static_cast<size_t>(dict->dict.group_count()) : 0;
}

chl_status chl_dictionary_group(const chl_dictionary* dict, size_t group, size_t* start,
                                size_t* size) {
  CHL_REQUIRE(dict);
  if (group >= chl_dictionary_group_count(dict))
    return fail(CHL_ERR_INVALID_ARGUMENT, "group index out of range");
  const auto& s = dict->dict.groups()[as_index(group)];
  if (start) *start = static_cast<size_t>(s.start);
  if (size) *size = static_cast<size_t>(s.size);
  return CHL_OK;
}

const char* chl_dictionary_label(const chl_dictionary* dict, size_t group) {
  if (!dict || group >= chl_dictionary_group_count(dict)) return nullptr;
  return dict->dict.label(as_index(group)).c_str();
}

chl_status chl_dictionary_atoms(const chl_dictionary* dict, double* out, size_t capacity) {
  CHL_REQUIRE(dict);
  CHL_REQUIRE(out);
  const auto& a = dict->dict.atoms();
  if (capacity < static_cast<size_t>(a.size()))
    return fail(CHL_ERR_DIMENSION, "output buffer holds " + std::to_string(capacity) +
                                       " values, need " + std::to_string(a.size()));
  std::memcpy(out, a.data(), sizeof(double) * static_cast<size_t>(a.size()));
  return CHL_OK;
}

void chl_solver_config_default(chl_solver_config* cfg) {
  if (!cfg) return;
  const chl::SolverConfig s;
  cfg->lambda1 = s.lambda1;
  cfg->lambda2_0 = s.lambda2_0;
  cfg->max_iters = s.max_iters;
  cfg->rel_tol = s.rel_tol;
  cfg->deterministic = s.deterministic ? 1 : 0;
  cfg->lambda2_scaling = CHL_LAMBDA2_SQRT_GROUP_SIZE_TIMES_SAMPLES;
}

chl_status chl_solve(const chl_dictionary* dict, chl_problem problem, const double* x,
                     size_t rows, size_t n, double lambda, const chl_solver_config* cfg,
                     const double* warm_start, double* codes_out, chl_solve_info* info) {
  CHL_REQUIRE(dict);
  CHL_REQUIRE(x);
  CHL_REQUIRE(codes_out);
  return guarded([&] {
    const chl::GroupedDictionary& d = dict->dict;
    if (as_index(rows) != d.rows())
      chl::throw_dimension("x", std::to_string(rows) + " rows, dictionary has " + std::to_string(d.rows()));
    const Eigen::MatrixXd samples = ConstMap(x, as_index(rows), as_index(n));
    const chl::SolverConfig s = to_solver(cfg);
    chl::CoefficientMatrix warm;
    const chl::CoefficientMatrix* warm_ptr = nullptr;
    if (warm_start) {
      warm = ConstMap(warm_start, d.cols(), as_index(n));
      warm_ptr = &warm;
    }
    chl::SolveResult r;
    switch (problem) {
      case CHL_PROBLEM_LASSO: r = chl::solve_lasso(d, samples, lambda, s, warm_ptr); break;
      case CHL_PROBLEM_GROUP_LASSO: r = chl::solve_group_lasso(d, samples, lambda, s, warm_ptr); break;
      case CHL_PROBLEM_COLLAB_LASSO: r = chl::solve_collab_lasso(d, samples, lambda, s, warm_ptr); break;
      case CHL_PROBLEM_CGLASSO: r = chl::solve_cglasso(d, samples, lambda, s, warm_ptr); break;
      case CHL_PROBLEM_CHILASSO: r = chl::solve_chilasso(d, samples, s, warm_ptr); break;
      default: chl::throw_invalid("unknown problem kind");
    }
    Eigen::Map<Eigen::MatrixXd>(codes_out, d.cols(), as_index(n)) = r.coefficients;
    if (info) {
      info->iterations = r.iterations;
      info->final_objective = r.final_objective;
      info->converged = r.converged ? 1 : 0;
    }
  });
}

chl_status chl_detect_active(const chl_dictionary* dict, const double* codes, size_t n,
                             double rel_threshold, int* flags_out, double* energies_out) {
  CHL_REQUIRE(dict);
  CHL_REQUIRE(codes);
  return guarded([&] {
    const chl::CoefficientMatrix a = ConstMap(codes, dict->dict.cols(), as_index(n));
    const chl::ActiveGroupSet s = chl::detect_active(a, dict->dict.groups(), chl::DetectionConfig{rel_threshold});
    for (size_t g = 0; g < s.flags.size(); ++g) {
      if (flags_out) flags_out[g] = s.flags[g] ? 1 : 0;
      if (energies_out) energies_out[g] = s.energies[g];
    }
  });
}

chl_status chl_prox_hilasso(const double* v, size_t len, double t1, double t2,
                            const size_t* group_sizes, size_t group_count, double* out) {
  CHL_REQUIRE(v);
  CHL_REQUIRE(out);
  return guarded([&] {
    const chl::GroupPartition groups = partition(group_sizes, group_count);
    groups.check_covers(as_index(len), "v");
    const Eigen::MatrixXd r = chl::prox_hilasso(ConstMap(v, as_index(len), 1), t1, t2, groups);
    std::memcpy(out, r.data(), sizeof(double) * len);
  });
}

chl_status chl_learn_subdictionary(const double* samples, size_t rows, size_t n, const char* label,
                                   size_t atom_count, double lambda, int epochs,
                                   const chl_solver_config* cfg, uint64_t seed,
                                   chl_dictionary** out) {
  CHL_REQUIRE(out);
  *out = nullptr;
  CHL_REQUIRE(samples);
  CHL_REQUIRE(label);
  return guarded([&] {
    chl::TrainingSet ts;
    ts.samples = chl::make_samples(ConstMap(samples, as_index(rows), as_index(n)));
    ts.class_label = label;
    ts.atom_count = as_index(atom_count);
    ts.lambda = lambda;
    ts.epochs = epochs;
    *out = new chl_dictionary{chl::learn_subdictionary(ts, to_solver(cfg), seed)};
  });
}

void chl_feature_config_default(chl_feature_config* cfg) {
  if (!cfg) return;
  const chl::FeatureConfig f;
  cfg->frame_len = static_cast<size_t>(f.frame_len);
  cfg->overlap = f.overlap;
  cfg->window = CHL_WINDOW_HANN;
  cfg->emphasis_alpha = -1.0;
  cfg->n_coeffs = static_cast<size_t>(f.n_coeffs);
  cfg->voiced_energy_frac = f.voiced_energy_frac;
}

chl_status chl_extract_features(const double* samples, size_t length, double sample_rate,
                                const chl_feature_config* cfg, double** features_out,
                                size_t* rows_out, size_t* cols_out, int64_t** starts_out) {
  CHL_REQUIRE(samples);
  CHL_REQUIRE(features_out);
  CHL_REQUIRE(rows_out);
  CHL_REQUIRE(cols_out);
  *features_out = nullptr;
  *rows_out = *cols_out = 0;
  if (starts_out) *starts_out = nullptr;
  return guarded([&] {
    chl::FeatureConfig fc;
    if (cfg) {
      fc.frame_len = as_index(cfg->frame_len);
      fc.overlap = cfg->overlap;
      switch (cfg->window) {
        case CHL_WINDOW_HANN: fc.window = chl::WindowKind::kHann; break;
        case CHL_WINDOW_HAMMING: fc.window = chl::WindowKind::kHamming; break;
        case CHL_WINDOW_RECTANGULAR: fc.window = chl::WindowKind::kRectangular; break;
        default: chl::throw_invalid("unknown window");
      }
      if (cfg->emphasis_alpha >= 0.0) fc.emphasis_alpha = cfg->emphasis_alpha;
      fc.n_coeffs = as_index(cfg->n_coeffs);
      fc.voiced_energy_frac = cfg->voiced_energy_frac;
    }
    chl::AudioSignal sig{std::vector<double>(samples, samples + length), sample_rate};
    const chl::SampleMatrix f = chl::extract_features(sig, fc);
    *rows_out = static_cast<size_t>(f.rows());
    *cols_out = static_cast<size_t>(f.cols());
    if (f.empty()) return;
    const size_t count = static_cast<size_t>(f.data.size());
    auto* data = static_cast<double*>(std::malloc(sizeof(double) * count));
    if (!data) throw std::bad_alloc();
    std::memcpy(data, f.data.data(), sizeof(double) * count);
    *features_out = data;
    if (starts_out) {
      auto* starts = static_cast<int64_t*>(std::malloc(sizeof(int64_t) * f.ids.size()));
      if (!starts) throw std::bad_alloc();
      for (size_t j = 0; j < f.ids.size(); ++j) starts[j] = f.ids[j].first;
      *starts_out = starts;
    }
  });
}

chl_status chl_run(const char* mode, const char* config_json, const char* config_dir,
                   const char* out_dir, int force, int jobs, const uint64_t* seed, int baselines,
                   int* exit_code, char** report_json) {
  CHL_REQUIRE(out_dir);
  CHL_REQUIRE(exit_code);
  if (report_json) *report_json = nullptr;
  *exit_code = 1;
  return guarded([&] {
    chl::harness::RunOptions opts;
    if (mode) opts.mode = mode;
    if (config_json) {
      try {
        opts.config = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::exception& e) {
        chl::throw_format(std::string("config: ") + e.what());
      }
    }
    if (config_dir) opts.config_dir = config_dir;
    opts.out_dir = out_dir;
    opts.force = force != 0;
    opts.jobs = jobs;
    if (seed) opts.seed = *seed;
    opts.baselines = baselines != 0;
    const chl::harness::RunReport r = chl::harness::run(opts);
    *exit_code = r.exit_code;
    if (report_json) {
      const nlohmann::json j{{"exit_code", r.exit_code}, {"messages", r.messages}, {"summary", r.summary}};
      *report_json = copy_string(j.dump());
    }
  });
}

}  // extern "C"

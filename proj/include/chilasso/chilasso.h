#ifndef CHILASSO_CHILASSO_H
#define CHILASSO_CHILASSO_H

/*
 * C interface to the chilasso sparse modeling library.
 *
 * Matrices cross the boundary as column-major double arrays. Objects are
 * opaque handles released with their *_free function. Every call that can
 * fail returns a chl_status; on failure chl_last_error() describes the
 * problem for the calling thread. Buffers allocated by the library are
 * released with chl_buffer_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(CHILASSO_BUILDING_LIBRARY)
#define CHL_API __attribute__((visibility("default")))
#else
#define CHL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum chl_status {
  CHL_OK = 0,
  CHL_ERR_INVALID_ARGUMENT = 1,
  CHL_ERR_DIMENSION = 2,
  CHL_ERR_IO = 3,
  CHL_ERR_FORMAT = 4,
  CHL_ERR_NUMERIC = 5,
  CHL_ERR_INTERNAL = 6,
  CHL_ERR_NULL_POINTER = 7
} chl_status;

typedef struct chl_dictionary chl_dictionary;

CHL_API const char* chl_version(void);
CHL_API const char* chl_status_string(chl_status status);
/* Message of the last failed call on this thread; empty if none. */
CHL_API const char* chl_last_error(void);
CHL_API void chl_buffer_free(void* buffer);

/* ------------------------------------------------------------ dictionary */

/* atoms: rows x cols column-major. labels may be NULL (groups get "g<k>").
 * With normalize != 0 the columns are scaled to unit norm; otherwise they
 * must already be unit norm. */
CHL_API chl_status chl_dictionary_create(const double* atoms, size_t rows, size_t cols,
                                         const size_t* group_sizes, size_t group_count,
                                         const char* const* labels, int normalize,
                                         chl_dictionary** out);
CHL_API chl_status chl_dictionary_load(const char* path, chl_dictionary** out);
CHL_API chl_status chl_dictionary_save(const chl_dictionary* dict, const char* path);
CHL_API chl_status chl_dictionary_concat(const chl_dictionary* const* parts, size_t count,
                                         chl_dictionary** out);
CHL_API void chl_dictionary_free(chl_dictionary* dict);

CHL_API size_t chl_dictionary_rows(const chl_dictionary* dict);
CHL_API size_t chl_dictionary_cols(const chl_dictionary* dict);
CHL_API size_t chl_dictionary_group_count(const chl_dictionary* dict);
CHL_API chl_status chl_dictionary_group(const chl_dictionary* dict, size_t group, size_t* start,
                                        size_t* size);
/* NULL when group is out of range. Valid while the handle lives. */
CHL_API const char* chl_dictionary_label(const chl_dictionary* dict, size_t group);
/* Copies rows x cols atoms, column-major, into out (capacity in doubles). */
CHL_API chl_status chl_dictionary_atoms(const chl_dictionary* dict, double* out, size_t capacity);

/* ---------------------------------------------------------------- solver */

typedef enum chl_lambda2_scaling {
  CHL_LAMBDA2_SQRT_GROUP_SIZE_TIMES_SAMPLES = 0,
  CHL_LAMBDA2_NONE = 1
} chl_lambda2_scaling;

typedef struct chl_solver_config {
  double lambda1;
  double lambda2_0;
  int max_iters;
  double rel_tol;
  int deterministic;
  chl_lambda2_scaling lambda2_scaling;
} chl_solver_config;

CHL_API void chl_solver_config_default(chl_solver_config* cfg);

typedef enum chl_problem {
  CHL_PROBLEM_LASSO = 0,
  CHL_PROBLEM_GROUP_LASSO = 1,
  CHL_PROBLEM_COLLAB_LASSO = 2,
  CHL_PROBLEM_CGLASSO = 3,
  CHL_PROBLEM_CHILASSO = 4
} chl_problem;

typedef struct chl_solve_info {
  int iterations;
  double final_objective;
  int converged;
} chl_solve_info;

/* Codes the rows x n samples in x. lambda weights the first four problems;
 * CHL_PROBLEM_CHILASSO takes lambda1 and lambda2_0 from cfg. codes_out
 * receives cols x n values. warm_start and info may be NULL; cfg may be NULL
 * for defaults. */
CHL_API chl_status chl_solve(const chl_dictionary* dict, chl_problem problem, const double* x,
                             size_t rows, size_t n, double lambda, const chl_solver_config* cfg,
                             const double* warm_start, double* codes_out, chl_solve_info* info);

/* flags_out and energies_out hold one entry per group; either may be NULL. */
CHL_API chl_status chl_detect_active(const chl_dictionary* dict, const double* codes, size_t n,
                                     double rel_threshold, int* flags_out, double* energies_out);

/* Proximal map of t1 ||.||_1 + t2 sum_G ||.||_2 on a vector of length len
 * partitioned by group_sizes. */
CHL_API chl_status chl_prox_hilasso(const double* v, size_t len, double t1, double t2,
                                    const size_t* group_sizes, size_t group_count, double* out);

/* --------------------------------------------------------------- learning */

/* samples: rows x n column-major. */
CHL_API chl_status chl_learn_subdictionary(const double* samples, size_t rows, size_t n,
                                           const char* label, size_t atom_count, double lambda,
                                           int epochs, const chl_solver_config* cfg,
                                           uint64_t seed, chl_dictionary** out);

/* --------------------------------------------------------------- features */

typedef enum chl_window { CHL_WINDOW_HANN = 0, CHL_WINDOW_HAMMING = 1, CHL_WINDOW_RECTANGULAR = 2 } chl_window;

typedef struct chl_feature_config {
  size_t frame_len;
  double overlap;
  chl_window window;
  double emphasis_alpha; /* negative selects 2 / sample_rate */
  size_t n_coeffs;
  double voiced_energy_frac;
} chl_feature_config;

CHL_API void chl_feature_config_default(chl_feature_config* cfg);

/* Voiced-frame features: *features_out is n_coeffs x *cols_out column-major
 * and *starts_out holds each column's start sample. Both buffers are
 * released with chl_buffer_free; they are NULL when no frame is voiced. */
CHL_API chl_status chl_extract_features(const double* samples, size_t length, double sample_rate,
                                        const chl_feature_config* cfg, double** features_out,
                                        size_t* rows_out, size_t* cols_out, int64_t** starts_out);

/* ---------------------------------------------------------------- harness */

/* Runs one experiment mode with a JSON configuration. seed may be NULL to
 * keep the configured seed and jobs <= 0 keeps the configured worker count.
 * *exit_code receives 0 (success), 1 (error) or 2 (self-check failure) and
 * *report_json, if report_json is not NULL, a JSON report to release with
 * chl_buffer_free. The call itself fails only for unusable arguments. */
CHL_API chl_status chl_run(const char* mode, const char* config_json, const char* config_dir,
                           const char* out_dir, int force, int jobs, const uint64_t* seed,
                           int baselines, int* exit_code, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* CHILASSO_CHILASSO_H */

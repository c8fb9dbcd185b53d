#ifndef HEPPCAT_H
#define HEPPCAT_H

/* C interface to the heppcat library. All objects are opaque handles owned
 * by the caller and released with the matching *_free function. Functions
 * returning heppcat_status report details through heppcat_last_error(). */

#include <stddef.h>
#include <stdint.h>

#if defined(HEPPCAT_BUILDING_LIBRARY)
#define HEPPCAT_API __attribute__((visibility("default")))
#else
#define HEPPCAT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum heppcat_status {
  HEPPCAT_OK = 0,
  HEPPCAT_ERR_USAGE = 2,
  HEPPCAT_ERR_NUMERICAL = 4,
  HEPPCAT_ERR_DOMAIN = 5,
  HEPPCAT_ERR_DEGENERATE = 6,
  HEPPCAT_ERR_IO = 7,
  HEPPCAT_ERR_INTERNAL = 8
} heppcat_status;

typedef struct heppcat_dataset heppcat_dataset;
typedef struct heppcat_truth heppcat_truth;
typedef struct heppcat_fit_result heppcat_fit_result;

/* Receives one chunk of human-readable output (summary tables, warnings). */
typedef void (*heppcat_text_sink)(const char* text, void* user);

HEPPCAT_API const char* heppcat_version(void);
/* Message of the last failed call on this thread; empty if none. */
HEPPCAT_API const char* heppcat_last_error(void);

/* ---- datasets ---- */

HEPPCAT_API heppcat_status heppcat_dataset_read_csv(const char* path, heppcat_dataset** out);
HEPPCAT_API heppcat_status heppcat_dataset_write_csv(const heppcat_dataset* ds, const char* path);
/* y is d x n column-major; columns are split into groups of the given sizes. */
HEPPCAT_API heppcat_status heppcat_dataset_from_matrix(size_t d, size_t n, const double* y, size_t num_groups,
                                                       const size_t* group_sizes, heppcat_dataset** out);
HEPPCAT_API void heppcat_dataset_free(heppcat_dataset* ds);

HEPPCAT_API size_t heppcat_dataset_dim(const heppcat_dataset* ds);
HEPPCAT_API size_t heppcat_dataset_num_groups(const heppcat_dataset* ds);
HEPPCAT_API size_t heppcat_dataset_group_size(const heppcat_dataset* ds, size_t group);
HEPPCAT_API const char* heppcat_dataset_group_label(const heppcat_dataset* ds, size_t group);

/* In place: subtract per-group means / replace blocks by their Gram factors. */
HEPPCAT_API heppcat_status heppcat_dataset_center(heppcat_dataset* ds);
HEPPCAT_API heppcat_status heppcat_dataset_compress(heppcat_dataset* ds);

/* Log-likelihood (ln(2 pi) constants dropped) of f (d x k, column-major) and v. */
HEPPCAT_API heppcat_status heppcat_dataset_loglik(const heppcat_dataset* ds, size_t k, const double* f,
                                                  const double* v, double* out);

/* ---- planted models ---- */

HEPPCAT_API heppcat_status heppcat_truth_create(size_t d, size_t k, const double* lambdas, size_t num_groups,
                                                const double* variances, const size_t* group_sizes, uint64_t seed,
                                                heppcat_truth** out);
/* Per-feature noise for one group: block i covers counts[i] consecutive features
 * with variance variances[i]; the counts must add up to d. */
HEPPCAT_API heppcat_status heppcat_truth_set_feature_blocks(heppcat_truth* truth, size_t group, size_t num_blocks,
                                                            const size_t* counts, const double* variances);
HEPPCAT_API heppcat_status heppcat_truth_generate(const heppcat_truth* truth, uint64_t seed, heppcat_dataset** out);
HEPPCAT_API heppcat_status heppcat_truth_write_json(const heppcat_truth* truth, const char* path);
HEPPCAT_API void heppcat_truth_free(heppcat_truth* truth);

/* ---- fitting ---- */

typedef struct heppcat_fit_options {
  size_t rank;
  const char* method;      /* rootfind | em | doc | quad | cubic */
  int max_iters;
  double tol;
  const char* init;        /* ppca | random */
  const char* block_rule;  /* alternate | max-improvement */
  uint64_t seed;
  int record_trace;
} heppcat_fit_options;

HEPPCAT_API void heppcat_fit_options_default(heppcat_fit_options* opts);

/* HEPPCAT_OK also when max_iters is reached; see heppcat_fit_converged. */
HEPPCAT_API heppcat_status heppcat_fit(const heppcat_dataset* ds, const heppcat_fit_options* opts,
                                       heppcat_fit_result** out);
HEPPCAT_API void heppcat_fit_result_free(heppcat_fit_result* res);

HEPPCAT_API int heppcat_fit_converged(const heppcat_fit_result* res);
HEPPCAT_API int heppcat_fit_iterations(const heppcat_fit_result* res);
HEPPCAT_API double heppcat_fit_loglik(const heppcat_fit_result* res);
HEPPCAT_API size_t heppcat_fit_dim(const heppcat_fit_result* res);
HEPPCAT_API size_t heppcat_fit_rank(const heppcat_fit_result* res);
HEPPCAT_API size_t heppcat_fit_num_groups(const heppcat_fit_result* res);
/* d x k column-major. */
HEPPCAT_API void heppcat_fit_factor(const heppcat_fit_result* res, double* f);
HEPPCAT_API void heppcat_fit_variances(const heppcat_fit_result* res, double* v);
/* Eigenvalues of F F' (descending), k entries. */
HEPPCAT_API void heppcat_fit_lambdas(const heppcat_fit_result* res, double* lambdas);
/* iterations + 1 entries when the trace was recorded, else 0. */
HEPPCAT_API size_t heppcat_fit_trace_length(const heppcat_fit_result* res);
HEPPCAT_API void heppcat_fit_trace_loglik(const heppcat_fit_result* res, double* loglik);
HEPPCAT_API heppcat_status heppcat_fit_write_json(const heppcat_fit_result* res, const char* path);

/* ---- experiments ---- */

typedef struct heppcat_benchmark_options {
  const char* preset;  /* fig3 | fig4 | fig5 | fig6-blocks | fig7 */
  int trials;
  const double* sigma_grid;  /* NULL: preset default */
  size_t sigma_grid_len;
  const char* methods;       /* comma-separated update names */
  uint64_t seed;
  int max_iters;
  unsigned threads;          /* 0: HEPPCAT_THREADS or all cores */
} heppcat_benchmark_options;

typedef struct heppcat_landscape_options {
  const double* sigma2_sq_grid;  /* NULL: 0.1, 1, 2, 3 */
  size_t sigma2_sq_grid_len;
  int random_inits;
  const char* methods;
  uint64_t seed;
  int max_iters;
  double tol;
  unsigned threads;
} heppcat_landscape_options;

HEPPCAT_API void heppcat_benchmark_options_default(heppcat_benchmark_options* opts);
HEPPCAT_API void heppcat_landscape_options_default(heppcat_landscape_options* opts);

/* Long-format metrics CSV to out_csv; summary table and warnings to sink. */
HEPPCAT_API heppcat_status heppcat_run_benchmark(const heppcat_benchmark_options* opts, const char* out_csv,
                                                 heppcat_text_sink sink, void* user);
HEPPCAT_API heppcat_status heppcat_run_landscape(const heppcat_landscape_options* opts, const char* out_csv,
                                                 heppcat_text_sink sink, void* user);
/* Objective and minorizer curves at the PPCA start of a rank-k fit. */
HEPPCAT_API heppcat_status heppcat_run_minorizers(const heppcat_dataset* ds, size_t rank, int points,
                                                  const char* out_csv, heppcat_text_sink sink, void* user);

#ifdef __cplusplus
}
#endif

#endif

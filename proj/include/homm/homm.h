/*
 * homm - higher-order moment matching for unsupervised domain adaptation.
 *
 * C interface to the shared library: moment-matching discrepancy measures
 * between feature batches, experiment configuration, dataset generation
 * and CSV interchange, training runs, and the built-in property checker.
 *
 * All functions returning homm_status set a thread-local error message on
 * failure, readable through homm_last_error(). Feature matrices are dense
 * row-major doubles (one sample per row).
 */

#ifndef HOMM_H
#define HOMM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum homm_status {
    HOMM_OK = 0,
    HOMM_ERROR_INVALID = 1,  /* contract violation: bad dimensions, ranges, config values */
    HOMM_ERROR_CAPACITY = 2, /* exact tensor power exceeds the memory cap */
    HOMM_ERROR_PARSE = 3,    /* malformed CSV or config text */
    HOMM_ERROR_IO = 4,       /* filesystem failure */
    HOMM_ERROR_NUMERIC = 5,  /* non-finite loss or gradient */
    HOMM_ERROR_INTERNAL = 6
} homm_status;

/* Library version string, e.g. "1.0.0". */
const char* homm_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* homm_last_error(void);

/* ---- discrepancy measures --------------------------------------------- */
/*
 * Each measure compares two feature batches with the same column count
 * and writes a non-negative scalar into *value. The exact measure accepts
 * different row counts; group/sampled/kernelized/gram require equal ones.
 */

/* Exact moment matching of the given order. */
homm_status homm_loss_full(const double* source, int64_t source_rows,
                           const double* target, int64_t target_rows,
                           int64_t cols, int32_t order, double* value);

/* Group-wise moment matching over `groups` contiguous coordinate groups. */
homm_status homm_loss_group(const double* source, int64_t source_rows,
                            const double* target, int64_t target_rows,
                            int64_t cols, int32_t order, int32_t groups, double* value);

/* Randomly sampled moment matching: `samples` tensor coordinates drawn
 * from `seed`. */
homm_status homm_loss_sampled(const double* source, int64_t source_rows,
                              const double* target, int64_t target_rows,
                              int64_t cols, int32_t order, int64_t samples,
                              uint64_t seed, double* value);

/* Kernelized matching of the sampled moment vectors;
 * k(x,y) = exp(-gamma * ||x-y||^exponent), exponent 1 or 2. */
homm_status homm_loss_kernelized(const double* source, int64_t source_rows,
                                 const double* target, int64_t target_rows,
                                 int64_t cols, int32_t order, int64_t samples,
                                 uint64_t seed, double gamma, int32_t exponent,
                                 double* value);

/* Squared distance of feature means, scaled by 1/cols. */
homm_status homm_loss_linear_mmd(const double* source, int64_t source_rows,
                                 const double* target, int64_t target_rows,
                                 int64_t cols, double* value);

/* Gram-matrix matching; centralize != 0 removes column means first
 * (covariance matching). */
homm_status homm_loss_gram(const double* source, int64_t source_rows,
                           const double* target, int64_t target_rows,
                           int64_t cols, int32_t centralize, double* value);

/* ---- experiment configuration ----------------------------------------- */

typedef struct homm_config homm_config;

/* A config with library defaults. */
homm_status homm_config_create(homm_config** out);

/* Parse a key = value config file. */
homm_status homm_config_load(const char* path, homm_config** out);

/* Override one key with a textual value (same syntax as the file). */
homm_status homm_config_set(homm_config* config, const char* key, const char* value);

/* Fetch one key's canonical textual value into buffer (NUL-terminated). */
homm_status homm_config_get(const homm_config* config, const char* key,
                            char* buffer, int64_t buffer_size);

/* Check every invariant; the error message names the offending field. */
homm_status homm_config_validate(const homm_config* config);

void homm_config_free(homm_config* config);

/* ---- datasets ----------------------------------------------------------- */

typedef struct homm_dataset homm_dataset;

/* Load a feature CSV (header row, optional trailing "label" column). */
homm_status homm_dataset_load_csv(const char* path, homm_dataset** out);

homm_status homm_dataset_save_csv(const homm_dataset* dataset, const char* path);

/* Generate the configured synthetic source/target pair. */
homm_status homm_dataset_generate(const homm_config* config,
                                  homm_dataset** source, homm_dataset** target);

int64_t homm_dataset_rows(const homm_dataset* dataset);
int64_t homm_dataset_cols(const homm_dataset* dataset);
int32_t homm_dataset_has_labels(const homm_dataset* dataset);

/* Borrowed pointer to row-major features, valid until the dataset is freed. */
const double* homm_dataset_features(const homm_dataset* dataset);

/* Copy labels into out (capacity in entries); fails if unlabeled. */
homm_status homm_dataset_labels(const homm_dataset* dataset, int32_t* out, int64_t capacity);

void homm_dataset_free(homm_dataset* dataset);

/* ---- training ----------------------------------------------------------- */

/*
 * Run one experiment and write manifest.json, metrics.jsonl, and
 * checkpoint.txt into output_dir (created if missing). Target labels are
 * used for the evaluation columns only; the training loop never sees
 * them. Accuracy outputs are optional (pass NULL to skip);
 * *final_target_accuracy is set to NaN when the target is unlabeled.
 */
homm_status homm_train_run(const homm_config* config, const homm_dataset* source,
                           const homm_dataset* target, const char* output_dir,
                           double* final_source_accuracy, double* final_target_accuracy);

/* ---- property checker ---------------------------------------------------- */

/*
 * Run the built-in analytic property suite (loss equivalences, sampled
 * estimator consistency, gradient verification) and return a JSON report:
 *   {"all_passed": bool, "properties": [{"name", "passed", "measured",
 *    "threshold", "detail"}, ...]}
 * The caller frees the string with homm_string_free.
 */
homm_status homm_self_check_json(char** report_json);

void homm_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HOMM_H */

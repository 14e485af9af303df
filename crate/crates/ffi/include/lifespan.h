#ifndef LIFESPAN_H
#define LIFESPAN_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every exported function.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_UTF8 = 2,
  LS_STATUS_IO = 3,
  LS_STATUS_PARSE = 4,
  LS_STATUS_VALIDATION = 5,
  LS_STATUS_NOT_FOUND = 6,
  LS_STATUS_INVALID_ARGUMENT = 7,
  LS_STATUS_EMPTY_EVALUATION = 8,
  LS_STATUS_UNDEFINED = 9,
  LS_STATUS_PANIC = 10,
} LsStatus;

/**
 * Loaded dataset.
 */
typedef struct LsDataset LsDataset;

/**
 * Model parameters.
 */
typedef struct LsParams LsParams;

/**
 * Life-span of one project.
 */
typedef struct LsLifespan {
  uint64_t days;
  uint64_t non_working_days;
  double non_working_ratio;
} LsLifespan;

/**
 * Evaluation summary.
 */
typedef struct LsEvaluation {
  size_t evaluated;
  size_t excluded;
  /**
   * Share of evaluated projects with relative error at or below the threshold.
   */
  double fraction_within;
} LsEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ls_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void ls_string_free(char *s);

/**
 * Loads projects, commits and developers from JSON-lines files.
 *
 * # Safety
 * Path arguments must be null-terminated strings; `out` must be writable.
 */
enum LsStatus ls_dataset_load(const char *projects_path,
                              const char *commits_path,
                              const char *developers_path,
                              struct LsDataset **out);

/**
 * Releases a dataset. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle from [`ls_dataset_load`], not yet freed.
 */
void ls_dataset_free(struct LsDataset *ds);

/**
 * Number of projects in the dataset.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum LsStatus ls_dataset_len(const struct LsDataset *ds, size_t *out);

/**
 * Checks dataset invariants. Writes the violation count; returns
 * `Validation` (with the first violation as message) when it is non-zero.
 *
 * # Safety
 * `ds` must be a live handle; `violations` must be writable.
 */
enum LsStatus ls_dataset_validate(const struct LsDataset *ds, size_t *violations);

/**
 * Life-span and non-working ratio of one project.
 *
 * # Safety
 * `ds` must be a live handle, `project_id` a null-terminated string and
 * `out` writable.
 */
enum LsStatus ls_dataset_project_lifespan(const struct LsDataset *ds,
                                          const char *project_id,
                                          uint32_t gap_threshold_days,
                                          bool exclusive,
                                          struct LsLifespan *out);

/**
 * Built-in reference parameters.
 *
 * # Safety
 * `out` must be writable.
 */
enum LsStatus ls_params_reference(struct LsParams **out);

/**
 * Parses and validates parameters from JSON.
 *
 * # Safety
 * `json` must be a null-terminated string; `out` must be writable.
 */
enum LsStatus ls_params_from_json(const char *json, struct LsParams **out);

/**
 * Serializes parameters to JSON. Free the result with [`ls_string_free`].
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
enum LsStatus ls_params_to_json(const struct LsParams *params, char **out);

/**
 * Releases parameters. Null is ignored.
 *
 * # Safety
 * `params` must be null or a live handle, not yet freed.
 */
void ls_params_free(struct LsParams *params);

/**
 * Predicted life-span in days for one project description.
 *
 * # Safety
 * `params` must be a live handle, `language` a null-terminated string,
 * `labels` an array of `label_count` null-terminated strings (may be null
 * when `label_count` is 0) and `out` writable.
 */
enum LsStatus ls_predict(const struct LsParams *params,
                         uint64_t file_count,
                         const char *language,
                         double follower_count,
                         const char *const *labels,
                         size_t label_count,
                         double *out);

/**
 * Non-working days and ratio of a commit history given as day numbers
 * (days since 1970-01-01, any order, duplicates allowed).
 *
 * # Safety
 * `commit_days` must point to `len` values (may be null when `len` is 0);
 * output pointers must be writable.
 */
enum LsStatus ls_non_working_ratio(const int64_t *commit_days,
                                   size_t len,
                                   uint64_t lifespan_days,
                                   uint32_t gap_threshold_days,
                                   bool exclusive,
                                   uint64_t *out_days,
                                   double *out_ratio);

/**
 * Evaluates predictions against actual life-spans over the whole dataset.
 *
 * # Safety
 * `ds` and `params` must be live handles; `out` must be writable.
 */
enum LsStatus ls_evaluate(const struct LsDataset *ds,
                          const struct LsParams *params,
                          double max_ratio,
                          double threshold,
                          struct LsEvaluation *out);

/**
 * Sample Pearson correlation of two equally long series.
 * Returns `Undefined` when a series is constant or too short.
 *
 * # Safety
 * `x` and `y` must each point to `len` values; `out` must be writable.
 */
enum LsStatus ls_pearson(const double *x, const double *y, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIFESPAN_H */

#ifndef SPARSE_NLS_H
#define SPARSE_NLS_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnlsStatus {
  SNLS_STATUS_OK = 0,
  SNLS_STATUS_NULL_POINTER = 1,
  SNLS_STATUS_INVALID_ARGUMENT = 2,
  SNLS_STATUS_INPUT = 3,
  SNLS_STATUS_NUMERICAL = 4,
  SNLS_STATUS_BUFFER_TOO_SMALL = 5,
  SNLS_STATUS_PANIC = 6,
} SnlsStatus;

typedef enum SnlsSolveStatus {
  SNLS_SOLVE_STATUS_CONVERGED = 0,
  SNLS_SOLVE_STATUS_MAX_ITERATIONS = 1,
  SNLS_SOLVE_STATUS_STALLED = 2,
} SnlsSolveStatus;

typedef struct SnlsDataset SnlsDataset;

typedef struct SnlsModel SnlsModel;

typedef struct SnlsResult SnlsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *snls_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *snls_version(void);

/**
 * Creates a bundled model: `"headneck"` or `"expsum<p>"`.
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SnlsStatus snls_model_new(const char *id, struct SnlsModel **out);

/**
 * # Safety
 * `model` must come from [`snls_model_new`] and not be used afterwards. Null is ignored.
 */
void snls_model_free(struct SnlsModel *model);

/**
 * Number of free parameters, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t snls_model_num_params(const struct SnlsModel *model);

/**
 * Builds a uniformly sampled dataset from `n` inputs and observations.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `out` must be valid.
 */
enum SnlsStatus snls_dataset_new(const double *x,
                                 const double *y,
                                 size_t n,
                                 double sample_rate,
                                 struct SnlsDataset **out);

/**
 * Loads a `t,x,y` CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SnlsStatus snls_dataset_load_csv(const char *path, struct SnlsDataset **out);

/**
 * # Safety
 * `data` must be null or a live handle; it must not be used afterwards.
 */
void snls_dataset_free(struct SnlsDataset *data);

/**
 * # Safety
 * `data` must be null or a live handle.
 */
size_t snls_dataset_len(const struct SnlsDataset *data);

/**
 * Fits from the typical values with L1 radius `radius` (use `INFINITY` for plain LM).
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SnlsStatus snls_fit(const struct SnlsModel *model,
                         const struct SnlsDataset *data,
                         double radius,
                         struct SnlsResult **out);

/**
 * Searches the radius leaving `n_star` parameters away from their typical values.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum SnlsStatus snls_select(const struct SnlsModel *model,
                            const struct SnlsDataset *data,
                            size_t n_star,
                            struct SnlsResult **out);

/**
 * # Safety
 * `result` must be null or a live handle; it must not be used afterwards.
 */
void snls_result_free(struct SnlsResult *result);

/**
 * Residual sum of squares, NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double snls_result_sse(const struct SnlsResult *result);

/**
 * Radius used by the fit (the selected radius for [`snls_select`]).
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double snls_result_radius(const struct SnlsResult *result);

/**
 * # Safety
 * `result` must be a live handle and `out` valid.
 */
enum SnlsStatus snls_result_status(const struct SnlsResult *result, enum SnlsSolveStatus *out);

/**
 * Copies the normalized deviations into `out[0..len]`.
 *
 * # Safety
 * `result` must be a live handle and `out` must hold `len` doubles.
 */
enum SnlsStatus snls_result_deviations(const struct SnlsResult *result, double *out, size_t len);

/**
 * Copies the physical parameter values into `out[0..len]`.
 *
 * # Safety
 * `result` must be a live handle and `out` must hold `len` doubles.
 */
enum SnlsStatus snls_result_params(const struct SnlsResult *result, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSE_NLS_H */

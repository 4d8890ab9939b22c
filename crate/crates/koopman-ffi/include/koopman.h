/* C ABI for the koopman-core EDMD toolkit. */

#ifndef KOOPMAN_H
#define KOOPMAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible FFI call.
 */
typedef enum KoopStatus {
  KOOP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KOOP_STATUS_NULL_ARGUMENT = 1,
  /**
   * A size, count, or numeric argument was out of range.
   */
  KOOP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The least-squares fit failed (degenerate data or dictionary).
   */
  KOOP_STATUS_FIT_FAILED = 3,
  /**
   * Prediction failed (dimension mismatch or numeric breakdown).
   */
  KOOP_STATUS_PREDICT_FAILED = 4,
  /**
   * Reading or writing a model file failed.
   */
  KOOP_STATUS_IO_FAILED = 5,
  /**
   * A JSON payload (dictionary spec or model) did not parse.
   */
  KOOP_STATUS_PARSE_FAILED = 6,
} KoopStatus;

/**
 * Opaque fitted model handle.
 */
typedef struct KoopModel KoopModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Short static description of a status code.
 */
const char *koop_status_message(enum KoopStatus status);

/**
 * Fits an EDMD model from `n_pairs` snapshot pairs.
 *
 * `x` and `y` are row-major `n_pairs x state_dim` buffers holding the
 * current and one-step-advanced states; `dt` is the sampling interval;
 * `dict_json` is a dictionary spec such as `{"kind":"rbf","n_centers":100}`
 * (concrete centers and widths are derived from the `x` states); pass
 * `svd_rtol <= 0` for the default truncation threshold. On success writes a
 * handle to `out_model`, owned by the caller until `koop_model_free`.
 *
 * # Safety
 * `x` and `y` must point to `n_pairs * state_dim` readable doubles and
 * `dict_json` to a NUL-terminated UTF-8 string.
 */
enum KoopStatus koop_model_fit(const double *x,
                               const double *y,
                               uintptr_t n_pairs,
                               uintptr_t state_dim,
                               double dt,
                               const char *dict_json,
                               double svd_rtol,
                               struct KoopModel **out_model);

/**
 * Releases a model handle. Null is a no-op.
 *
 * # Safety
 * `model` must be a pointer returned by this library, not yet freed.
 */
void koop_model_free(struct KoopModel *model);

/**
 * State dimension of the model; 0 for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uintptr_t koop_model_state_dim(const struct KoopModel *model);

/**
 * Dimension of the lifted space (and eigenvalue count); 0 for null.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uintptr_t koop_model_lifted_dim(const struct KoopModel *model);

/**
 * RMS lifted one-step fit residual; NaN for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
double koop_model_fit_residual(const struct KoopModel *model);

/**
 * Predicts the state `l` steps ahead of `x0`, writing `state_dim` doubles
 * to `out`. `l = 0` returns the model's reconstruction of `x0` itself.
 *
 * # Safety
 * `x0` and `out` must each point to `state_dim` doubles matching the model.
 */
enum KoopStatus koop_model_predict(const struct KoopModel *model,
                                   const double *x0,
                                   uintptr_t state_dim,
                                   uintptr_t l,
                                   double *out);

/**
 * Copies the Koopman eigenvalues into `out_re`/`out_im`, each of capacity
 * `cap >= koop_model_lifted_dim(model)`.
 *
 * # Safety
 * `out_re` and `out_im` must each point to `cap` writable doubles.
 */
enum KoopStatus koop_model_eigenvalues(const struct KoopModel *model,
                                       double *out_re,
                                       double *out_im,
                                       uintptr_t cap);

/**
 * Serializes the model to JSON. The returned string must be released with
 * `koop_string_free`; null is returned only on a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
char *koop_model_to_json(const struct KoopModel *model);

/**
 * Releases a string returned by `koop_model_to_json`. Null is a no-op.
 *
 * # Safety
 * `s` must be a string returned by this library, not yet freed.
 */
void koop_string_free(char *s);

/**
 * Deserializes a model from the JSON produced by `koop_model_to_json`.
 *
 * # Safety
 * `json` must be a NUL-terminated UTF-8 string, `out_model` non-null.
 */
enum KoopStatus koop_model_from_json(const char *json, struct KoopModel **out_model);

/**
 * Writes the model JSON to `path`.
 *
 * # Safety
 * `model` must be a live handle, `path` a NUL-terminated UTF-8 string.
 */
enum KoopStatus koop_model_save(const struct KoopModel *model, const char *path);

/**
 * Loads a model JSON file written by `koop_model_save`.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string, `out_model` non-null.
 */
enum KoopStatus koop_model_load(const char *path, struct KoopModel **out_model);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KOOPMAN_H */

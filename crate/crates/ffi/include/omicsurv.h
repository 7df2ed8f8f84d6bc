#ifndef OMICSURV_H
#define OMICSURV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum OmsStatus {
  OMS_STATUS_OK = 0,
  OMS_STATUS_NULL_POINTER = 1,
  OMS_STATUS_INVALID_UTF8 = 2,
  OMS_STATUS_INVALID_INPUT = 3,
  OMS_STATUS_INVALID_CONFIG = 4,
  OMS_STATUS_IO = 5,
  OMS_STATUS_MALFORMED_DATA = 6,
  OMS_STATUS_NO_EVENTS = 7,
  OMS_STATUS_NOT_FITTED = 8,
  OMS_STATUS_ALL_FOLDS_FAILED = 9,
  OMS_STATUS_NUMERICAL_FAILURE = 10,
  OMS_STATUS_UNSUPPORTED_MODEL = 11,
  OMS_STATUS_PANIC = 12,
} OmsStatus;

// A loaded or generated multi-omics cohort.
typedef struct OmsDataset OmsDataset;

// A fitted fingerprint model.
typedef struct OmsModel OmsModel;

// Fold-level results of a cross-validation run.
typedef struct OmsReport OmsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *oms_version(void);

// Copy of the calling thread's most recent error message, or null if none
// was recorded. Release with [`oms_string_free`].
char *oms_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void oms_string_free(char *s);

// Loads a dataset directory (one TSV per layer plus `survival.tsv`).
//
// # Safety
// `path` must be a nul-terminated string and `out` a writable pointer.
enum OmsStatus oms_dataset_load(const char *path, struct OmsDataset **out);

// Generates a synthetic cohort from a JSON spec with keys `n_samples`,
// `layers` (`[[name, width], ...]`), `planted`
// (`[{"layer", "index", "weight"}, ...]`), `censoring_rate` and `seed`.
//
// # Safety
// `spec_json` must be a nul-terminated string and `out` a writable pointer.
enum OmsStatus oms_dataset_synthetic(const char *spec_json, struct OmsDataset **out);

// # Safety
// `ds` must be a live dataset handle and `out` a writable pointer.
enum OmsStatus oms_dataset_shape(const struct OmsDataset *ds, size_t *n_samples, size_t *n_layers);

// Releases a dataset. Null is ignored.
//
// # Safety
// `ds` must come from this library and not have been freed already.
void oms_dataset_free(struct OmsDataset *ds);

// Repeated k-fold cross-validation of one model kind (`"pca"`, `"ae"`,
// `"sae"` or `"csae"`).
//
// # Safety
// `ds` must be a live handle, `model` a nul-terminated string,
// `config_json` null or a nul-terminated string, `out` writable.
enum OmsStatus oms_cross_validate(const struct OmsDataset *ds,
                                  const char *model,
                                  const char *config_json,
                                  struct OmsReport **out);

// Mean test C-index over successful folds and the number of fold records.
//
// # Safety
// `report` must be a live handle; outputs must be writable.
enum OmsStatus oms_report_summary(const struct OmsReport *report,
                                  double *mean_c_index,
                                  size_t *n_folds,
                                  size_t *n_failed);

// Fold record `index` in (repeat, fold) order. `c_index` is NaN for a
// failed fold.
//
// # Safety
// `report` must be a live handle; outputs must be writable.
enum OmsStatus oms_report_fold(const struct OmsReport *report,
                               size_t index,
                               size_t *repeat,
                               size_t *fold,
                               double *c_index);

// Report as CSV (`as_json == 0`) or JSON. Release with [`oms_string_free`].
//
// # Safety
// `report` must be a live handle and `out` writable.
enum OmsStatus oms_report_serialize(const struct OmsReport *report, int32_t as_json, char **out);

// Releases a report. Null is ignored.
//
// # Safety
// `report` must come from this library and not have been freed already.
void oms_report_free(struct OmsReport *report);

// Fits a model on a row-major `n x d` matrix. `time`/`event` may be null
// for the unsupervised kinds.
//
// # Safety
// `x` must hold `n * d` values, `time` and `event` `n` values each (or be
// null), strings must be nul-terminated and `out` writable.
enum OmsStatus oms_model_fit(const char *model,
                             const char *config_json,
                             const double *x,
                             size_t n,
                             size_t d,
                             const double *time,
                             const uint8_t *event,
                             uint64_t seed,
                             struct OmsModel **out);

// # Safety
// `model` must be a live handle and `out` writable.
enum OmsStatus oms_model_n_fingerprints(const struct OmsModel *model, size_t *out);

// Writes the `n x F` fingerprints row-major into `out`, which must have
// room for `out_len >= n * F` values.
//
// # Safety
// `x` must hold `n * d` values and `out` `out_len` values.
enum OmsStatus oms_model_transform(const struct OmsModel *model,
                                   const double *x,
                                   size_t n,
                                   size_t d,
                                   double *out,
                                   size_t out_len);

// Model as JSON. Release with [`oms_string_free`].
//
// # Safety
// `model` must be a live handle and `out` writable.
enum OmsStatus oms_model_to_json(const struct OmsModel *model, char **out);

// # Safety
// `json` must be a nul-terminated string and `out` writable.
enum OmsStatus oms_model_from_json(const char *json, struct OmsModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from this library and not have been freed already.
void oms_model_free(struct OmsModel *model);

// Harrell's C-index of `predictions` (higher = riskier) against survival
// labels; `event[i] != 0` marks an observed event.
//
// # Safety
// The three arrays must hold `n` values each and `out` must be writable.
enum OmsStatus oms_concordance_index(const double *predictions,
                                     const double *time,
                                     const uint8_t *event,
                                     size_t n,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMICSURV_H */

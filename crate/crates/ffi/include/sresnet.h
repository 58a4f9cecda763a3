#ifndef SRESNET_H
#define SRESNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrnStatus {
  SRN_STATUS_OK = 0,
  SRN_STATUS_NULL_POINTER = 1,
  SRN_STATUS_INVALID_ARGUMENT = 2,
  SRN_STATUS_IO = 3,
  SRN_STATUS_FORMAT = 4,
  SRN_STATUS_VERSION = 5,
  SRN_STATUS_SHAPE_MISMATCH = 6,
  SRN_STATUS_DIMENSION = 7,
  SRN_STATUS_UNDEFINED_SIMILARITY = 8,
  SRN_STATUS_BUFFER_TOO_SMALL = 9,
  SRN_STATUS_INTERNAL = 10,
} SrnStatus;

/**
 * A loaded model in inference mode together with its input standardization.
 */
typedef struct SrnModel SrnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a checkpoint using the configuration stored in its header.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SrnStatus srn_model_load(const char *path, struct SrnModel **out);

/**
 * Releases a handle from [`srn_model_load`]. Null is ignored.
 *
 * # Safety
 * `model` must be null or a live handle; it must not be used afterwards.
 */
void srn_model_free(struct SrnModel *model);

/**
 * Feature vector length, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t srn_model_feature_dim(const struct SrnModel *model);

/**
 * Number of output classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t srn_model_num_classes(const struct SrnModel *model);

/**
 * Expected input height and width.
 *
 * # Safety
 * `model` must be a live handle; `height` and `width` must be writable.
 */
enum SrnStatus srn_model_input_size(const struct SrnModel *model, size_t *height, size_t *width);

/**
 * Penultimate features for `n` images laid out `[n, 3, H, W]` with values
 * in `[0, 1]`. Writes `n * feature_dim` doubles to `out`.
 *
 * # Safety
 * `images` must hold `n * 3 * H * W` doubles; `out` must hold `out_len`.
 */
enum SrnStatus srn_model_extract_features(const struct SrnModel *model,
                                          const double *images,
                                          size_t n,
                                          double *out,
                                          size_t out_len);

/**
 * Predicted class index per image (argmax, ties to the lowest index).
 *
 * # Safety
 * `images` must hold `n * 3 * H * W` doubles; `labels` must hold `n` entries.
 */
enum SrnStatus srn_model_predict(const struct SrnModel *model,
                                 const double *images,
                                 size_t n,
                                 size_t *labels);

/**
 * Cosine similarity in `[-1, 1]`; zero vectors yield `UndefinedSimilarity`.
 *
 * # Safety
 * `x` and `y` must hold `dim` doubles; `out` must be writable.
 */
enum SrnStatus srn_cosine(const double *x, const double *y, size_t dim, double *out);

/**
 * # Safety
 * `x` and `y` must hold `dim` doubles; `out` must be writable.
 */
enum SrnStatus srn_euclidean(const double *x, const double *y, size_t dim, double *out);

/**
 * # Safety
 * `x` and `y` must hold `dim` doubles; `out` must be writable.
 */
enum SrnStatus srn_manhattan(const double *x, const double *y, size_t dim, double *out);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *srn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *srn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRESNET_H */

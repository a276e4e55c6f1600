#ifndef FASTBP_H
#define FASTBP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FbpStatus {
  FBP_STATUS_OK = 0,
  FBP_STATUS_NULL_POINTER = 1,
  FBP_STATUS_INVALID_ARGUMENT = 2,
  FBP_STATUS_PARSE_ERROR = 3,
  FBP_STATUS_MODEL_ERROR = 4,
  FBP_STATUS_INFERENCE_ERROR = 5,
  FBP_STATUS_TOO_LARGE = 6,
  FBP_STATUS_BUFFER_TOO_SMALL = 7,
  FBP_STATUS_PANIC = 8,
} FbpStatus;

typedef enum FbpKernel {
  FBP_KERNEL_STANDARD = 0,
  FBP_KERNEL_FAST = 1,
  FBP_KERNEL_PRUNED = 2,
} FbpKernel;

typedef enum FbpDomain {
  FBP_DOMAIN_SUM_PRODUCT = 0,
  FBP_DOMAIN_MAX_SUM = 1,
} FbpDomain;

/**
 * Opaque model handle.
 */
typedef struct FbpModel FbpModel;

typedef struct FbpStereoParams {
  size_t num_disparities;
  double alpha;
  double t_b;
  double beta;
  double t_u;
  size_t sweeps;
} FbpStereoParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *fbp_last_error(void);

/**
 * Default stereo parameters.
 */
struct FbpStereoParams fbp_stereo_default_params(void);

/**
 * Parses a model in the plain-text MRF format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FbpStatus fbp_model_parse(const char *text, struct FbpModel **out);

/**
 * Builds the stereo grid model from two row-major 8-bit images of
 * `height * width` pixels each.
 *
 * # Safety
 * `left` and `right` must point to `height * width` bytes; `params` and
 * `out` must be valid pointers.
 */
enum FbpStatus fbp_model_stereo(const uint8_t *left,
                                const uint8_t *right,
                                size_t height,
                                size_t width,
                                const struct FbpStereoParams *params,
                                struct FbpModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void fbp_model_free(struct FbpModel *model);

/**
 * Node count, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t fbp_model_num_nodes(const struct FbpModel *model);

/**
 * Label count, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t fbp_model_num_labels(const struct FbpModel *model);

/**
 * Runs `sweeps` sweeps of the model's default schedule and writes one label
 * per node into `labels_out`.
 *
 * # Safety
 * `model` must be a live handle; `labels_out` must hold `len` values.
 */
enum FbpStatus fbp_run_labels(const struct FbpModel *model,
                              uint32_t kernel,
                              uint32_t domain,
                              size_t sweeps,
                              uint32_t *labels_out,
                              size_t len);

/**
 * Sum-product beliefs after `sweeps` sweeps, node-major
 * (`num_nodes * num_labels` values).
 *
 * # Safety
 * `model` must be a live handle; `beliefs_out` must hold `len` values.
 */
enum FbpStatus fbp_run_beliefs(const struct FbpModel *model,
                               uint32_t kernel,
                               size_t sweeps,
                               double *beliefs_out,
                               size_t len);

/**
 * Exact marginals by enumeration, node-major. Fails with `TooLarge` past the
 * enumeration limit.
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `len` values.
 */
enum FbpStatus fbp_exact_marginals(const struct FbpModel *model, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTBP_H */

#ifndef LRCLUSTER_H
#define LRCLUSTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LrcStatus {
  LRC_STATUS_OK = 0,
  LRC_STATUS_NULL_POINTER = 1,
  LRC_STATUS_INVALID_UTF8 = 2,
  LRC_STATUS_INVALID_ARGUMENT = 3,
  LRC_STATUS_DIMENSION_MISMATCH = 4,
  LRC_STATUS_TOO_LARGE = 5,
  LRC_STATUS_OUTSIDE_VALIDITY = 6,
  LRC_STATUS_NUMERICAL = 7,
  LRC_STATUS_PANIC = 8,
} LrcStatus;

/**
 * Opaque model handle.
 */
typedef struct LrcModel LrcModel;

/**
 * Opaque spectral decomposition handle.
 */
typedef struct LrcSpectrum LrcSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next failing call.
 */
const char *lrc_last_error(void);

/**
 * Static NUL-terminated version string.
 */
const char *lrc_version(void);

/**
 * Builds a model from a JSON model spec (`{"family": "davies", "N": 4, ...}`).
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LrcStatus lrc_model_from_spec(const char *spec_json, struct LrcModel **out);

/**
 * Loads a model from the exported JSON term list.
 *
 * # Safety
 * `model_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LrcStatus lrc_model_from_export(const char *model_json, struct LrcModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void lrc_model_free(struct LrcModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum LrcStatus lrc_model_num_sites(const struct LrcModel *model, size_t *out);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum LrcStatus lrc_model_hilbert_dim(const struct LrcModel *model, size_t *out);

/**
 * Heisenberg-picture generator applied to a D×D operator. `len` is 2·D² for both buffers.
 *
 * # Safety
 * `input` and `out` must point to `len` doubles.
 */
enum LrcStatus lrc_apply_adjoint(const struct LrcModel *model,
                                 const double *input,
                                 size_t len,
                                 double *out);

/**
 * Schrödinger-picture generator applied to a D×D operator.
 *
 * # Safety
 * `input` and `out` must point to `len` doubles.
 */
enum LrcStatus lrc_apply_forward(const struct LrcModel *model,
                                 const double *input,
                                 size_t len,
                                 double *out);

/**
 * Full eigendecomposition of the generator.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum LrcStatus lrc_spectrum_analyze(const struct LrcModel *model, struct LrcSpectrum **out);

/**
 * # Safety
 * `spectrum` must come from this library and not be used afterwards.
 */
void lrc_spectrum_free(struct LrcSpectrum *spectrum);

/**
 * # Safety
 * `spectrum` must be a live handle and `out` a valid pointer.
 */
enum LrcStatus lrc_spectrum_gap(const struct LrcSpectrum *spectrum, double *out);

/**
 * # Safety
 * `spectrum` must be a live handle and `out` a valid pointer.
 */
enum LrcStatus lrc_spectrum_len(const struct LrcSpectrum *spectrum, size_t *out);

/**
 * Writes the eigenvalues as interleaved (re, im) pairs; `len` must be 2·lrc_spectrum_len.
 *
 * # Safety
 * `out` must point to `len` doubles.
 */
enum LrcStatus lrc_spectrum_eigenvalues(const struct LrcSpectrum *spectrum,
                                        double *out,
                                        size_t len);

/**
 * Writes the steady state as a D×D interleaved matrix; `len` must be 2·D².
 *
 * # Safety
 * `out` must point to `len` doubles.
 */
enum LrcStatus lrc_spectrum_steady_state(const struct LrcSpectrum *spectrum,
                                         double *out,
                                         size_t len);

/**
 * Light-cone envelope C(r, t). `params_json` may be NULL for defaults; `alpha`
 * and `d` always override it.
 *
 * # Safety
 * `regime` must be a NUL-terminated string, `params_json` NULL or one, and `out` valid.
 */
enum LrcStatus lrc_envelope_eval(const char *regime,
                                 const char *params_json,
                                 double alpha,
                                 size_t d,
                                 double r,
                                 double t,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRCLUSTER_H */

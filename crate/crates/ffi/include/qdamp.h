/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef QDAMP_H
#define QDAMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QdExperiment {
  QD_EXPERIMENT_SINGLE = 0,
  QD_EXPERIMENT_COLLECTIVE = 1,
} QdExperiment;

typedef enum QdStatus {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_INVALID_ARGUMENT = 2,
  QD_STATUS_DIMENSION_MISMATCH = 3,
  QD_STATUS_VERIFICATION_FAILED = 4,
  QD_STATUS_INTEGRATION_FAILED = 5,
  QD_STATUS_IO = 6,
  QD_STATUS_PANIC = 7,
} QdStatus;

/**
 * Opaque complex matrix.
 */
typedef struct QdMatrix QdMatrix;

/**
 * Opaque experiment result.
 */
typedef struct QdResult QdResult;

typedef struct QdConfig {
  enum QdExperiment experiment;
  /**
   * Initial condition 1..6, collective runs only.
   */
  uint8_t initial;
  double gamma;
  uint64_t n_shots;
  uint64_t n_ave;
  uint64_t seed;
  bool exact;
} QdConfig;

typedef struct QdThetas {
  double theta21;
  double theta32;
  double theta31;
} QdThetas;

/**
 * One row of an experiment result. Single-qubit runs fill two weights.
 */
typedef struct QdRow {
  double t;
  double theta21;
  double theta32;
  double theta31;
  double weights[4];
  size_t n_weights;
  double jz_mean;
  double jz_var;
  double jz_exact_me;
} QdRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *qd_last_error(void);

/**
 * Static, nul-terminated library version.
 */
const char *qd_version(void);

/**
 * Defaults used by the command-line tool for `experiment`.
 */
struct QdConfig qd_config_default(enum QdExperiment experiment);

/**
 * Builds a `rows x cols` matrix from row-major real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must point to `rows * cols` doubles; `im` may be null for a
 * real matrix. `out` must be writable.
 */
enum QdStatus qd_matrix_new(size_t rows,
                            size_t cols,
                            const double *re,
                            const double *im,
                            struct QdMatrix **out);

/**
 * # Safety
 * `m` must be null or a handle returned by this library, not yet freed.
 */
void qd_matrix_free(struct QdMatrix *m);

/**
 * Row count, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t qd_matrix_rows(const struct QdMatrix *m);

/**
 * Column count, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t qd_matrix_cols(const struct QdMatrix *m);

/**
 * # Safety
 * `m` must be a live handle; `re` and `im` must be writable.
 */
enum QdStatus qd_matrix_get(const struct QdMatrix *m,
                            size_t row,
                            size_t col,
                            double *re,
                            double *im);

/**
 * Copies all entries row-major into `re` and `im`, each of length `len`.
 *
 * # Safety
 * `m` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum QdStatus qd_matrix_copy(const struct QdMatrix *m, double *re, double *im, size_t len);

/**
 * Dilation unitary of the single-qubit channel (4x4).
 *
 * # Safety
 * `out` must be writable.
 */
enum QdStatus qd_u_ad_single(double theta, struct QdMatrix **out);

/**
 * Dilation unitary of the collective two-qubit channel (16x16), built from
 * the plane rotations directly.
 *
 * # Safety
 * `out` must be writable.
 */
enum QdStatus qd_u_ad_two_explicit(struct QdThetas thetas, struct QdMatrix **out);

/**
 * Same unitary, multiplied out from its one- and two-qubit gate circuit.
 *
 * # Safety
 * `out` must be writable.
 */
enum QdStatus qd_u_ad_two_circuit(struct QdThetas thetas, struct QdMatrix **out);

/**
 * Rotation angles for time `t` at decay rate `gamma`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QdStatus qd_thetas_two(double t, double gamma, struct QdThetas *out);

/**
 * Output of the two-qubit channel for a 4x4 input density matrix.
 *
 * # Safety
 * `rho` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_rho_out_two(const struct QdMatrix *rho,
                             struct QdThetas thetas,
                             struct QdMatrix **out);

/**
 * Closed-form master-equation solution at time `t` for a 4x4 input.
 *
 * # Safety
 * `rho` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_analytic_two(const struct QdMatrix *rho,
                              double t,
                              double gamma,
                              struct QdMatrix **out);

/**
 * `<J^z>` of a 4x4 two-qubit density matrix.
 *
 * # Safety
 * `rho` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_jz_two(const struct QdMatrix *rho, double *out);

/**
 * Runs a single-qubit or collective experiment.
 *
 * # Safety
 * `config` must be readable; `out` must be writable.
 */
enum QdStatus qd_run_experiment(const struct QdConfig *config, struct QdResult **out);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
void qd_result_free(struct QdResult *r);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t qd_result_len(const struct QdResult *r);

/**
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_result_row(const struct QdResult *r, size_t index, struct QdRow *out);

/**
 * CSV rendering identical to the command-line output. Release with
 * [`qd_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_result_to_csv(const struct QdResult *r, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void qd_string_free(char *s);

/**
 * Runs the decomposition and channel verification suite. Returns
 * `VerificationFailed` when any check fails; the counts are filled either way.
 *
 * # Safety
 * `n_checks` and `n_failed` must be null or writable.
 */
enum QdStatus qd_verify(size_t *n_checks, size_t *n_failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDAMP_H */

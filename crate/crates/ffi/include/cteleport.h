#ifndef CTELEPORT_H
#define CTELEPORT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CT_VARIANT_X_SECOND 0

#define CT_VARIANT_Z_LATE_H 1

#define CT_VARIANT_DIRECT 2

/**
 * Outcome codes: Φ+, Φ−, Ψ+, Ψ−.
 */
#define CT_PHI_PLUS 0

#define CT_PHI_MINUS 1

#define CT_PSI_PLUS 2

#define CT_PSI_MINUS 3

typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_POINTER = 1,
  CT_STATUS_INVALID_ARGUMENT = 2,
  CT_STATUS_NOT_NORMALIZED = 3,
  CT_STATUS_IMPOSSIBLE_BRANCH = 4,
  CT_STATUS_ORACLE_FAILURE = 5,
  CT_STATUS_BUFFER_TOO_SMALL = 6,
  CT_STATUS_PANIC = 7,
} CtStatus;

/**
 * Opaque record of one run.
 */
typedef struct CtTrace CtTrace;

typedef struct CtComplex {
  double re;
  double im;
} CtComplex;

/**
 * `ua`/`ub` are 0..3 for `U0..U3`. `present` is false when no correction
 * was applied.
 */
typedef struct CtCorrection {
  uint8_t ua;
  uint8_t ub;
  bool cnot;
  bool present;
} CtCorrection;

typedef struct CtVerifySummary {
  uint64_t branches;
  uint64_t passed;
  double max_probability_deviation;
  double max_fidelity_deviation;
  double max_predictor_distance;
  bool cnot_used;
  bool all_passed;
} CtVerifySummary;

typedef struct CtEfficiency {
  uint32_t q_u;
  uint32_t q_t;
  uint32_t b_t;
  double eta_q;
  double eta_t;
} CtEfficiency;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Runs one session. `amps` points to `a, b, c, d`. With `forced` null the
 * outcomes are sampled from `seed`; otherwise `forced` holds `n + 2`
 * outcome codes. On success `*out` owns a new trace.
 *
 * # Safety
 * `amps` must point to 4 values, `forced` (if not null) to `forced_len`
 * values, and `out` must be writable.
 */
enum CtStatus ct_run_teleport(const struct CtComplex *amps,
                              uint32_t n,
                              uint32_t variant,
                              const uint32_t *forced,
                              size_t forced_len,
                              uint64_t seed,
                              struct CtTrace **out);

/**
 * # Safety
 * `trace` must come from `ct_run_teleport` and not be used afterwards.
 */
void ct_trace_free(struct CtTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum CtStatus ct_trace_fidelity(const struct CtTrace *trace, double *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum CtStatus ct_trace_global_phase(const struct CtTrace *trace, struct CtComplex *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum CtStatus ct_trace_correction(const struct CtTrace *trace, struct CtCorrection *out);

/**
 * True when the receiver applied a correction from the tables.
 *
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum CtStatus ct_trace_reconstructed(const struct CtTrace *trace, bool *out);

/**
 * Copies the outcome codes into `buf`. `*len` receives the count even when
 * `cap` is too small.
 *
 * # Safety
 * `buf` must hold `cap` values (may be null when `cap` is 0), `len` must be
 * writable.
 */
enum CtStatus ct_trace_outcomes(const struct CtTrace *trace,
                                uint32_t *buf,
                                size_t cap,
                                size_t *len);

/**
 * Receiver's state after correction, 4 amplitudes.
 *
 * # Safety
 * `out` must point to room for 4 values.
 */
enum CtStatus ct_trace_post_state(const struct CtTrace *trace, struct CtComplex *out);

/**
 * The trace in the JSON schema written by the command-line tool. Release
 * with `ct_string_free`; null on failure.
 *
 * # Safety
 * `trace` must be a live handle.
 */
char *ct_trace_to_json(const struct CtTrace *trace);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ct_string_free(char *s);

/**
 * Walks every branch for `n <= 6` controllers.
 *
 * # Safety
 * `amps` must point to 4 values and `out` be writable.
 */
enum CtStatus ct_verify_all_branches(const struct CtComplex *amps,
                                     uint32_t n,
                                     uint32_t variant,
                                     struct CtVerifySummary *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CtStatus ct_efficiency(uint32_t n, struct CtEfficiency *out);

/**
 * Table lookup. Signs are passed as bits: 0 for `+`, 1 for `−`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CtStatus ct_correction_lookup(uint8_t v_xa1,
                                   uint8_t v_total,
                                   uint8_t p_yb1,
                                   uint8_t p_total,
                                   uint32_t n,
                                   struct CtCorrection *out);

/**
 * Sends a classical secret ("0+", "1-", "0-" or "1+") through one sampled
 * session. `*decoded` receives a static string naming the decoded message.
 *
 * # Safety
 * `message` must be a NUL-terminated string and `decoded` writable.
 */
enum CtStatus ct_qss_classical(const char *message,
                               uint32_t n,
                               uint64_t seed,
                               const char **decoded);

/**
 * Message for the last failed call on this thread; empty after success.
 * Valid until the next call on the same thread.
 */
const char *ct_last_error_message(void);

const char *ct_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTELEPORT_H */

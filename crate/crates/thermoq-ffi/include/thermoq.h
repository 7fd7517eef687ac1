#ifndef THERMOQ_H
#define THERMOQ_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ThermoqStatus {
  THERMOQ_STATUS_OK = 0,
  THERMOQ_STATUS_NULL_POINTER = 1,
  THERMOQ_STATUS_INVALID_ARGUMENT = 2,
  THERMOQ_STATUS_PARSE = 3,
  THERMOQ_STATUS_DOMAIN = 4,
  THERMOQ_STATUS_PANIC = 5,
} ThermoqStatus;

/**
 * Rank non-decreasing decision.
 */
typedef enum ThermoqVerdict {
  THERMOQ_VERDICT_YES = 0,
  THERMOQ_VERDICT_NO = 1,
  THERMOQ_VERDICT_INCONCLUSIVE = 2,
} ThermoqVerdict;

/**
 * Opaque instrument handle.
 */
typedef struct ThermoqInstrument ThermoqInstrument;

/**
 * Opaque CP map handle.
 */
typedef struct ThermoqMap ThermoqMap;

/**
 * Tolerance overrides; any non-positive or non-finite field keeps the default.
 */
typedef struct ThermoqTolerances {
  double herm_tol;
  double psd_tol;
  double trace_tol;
  double proj_tol;
  double span_tol;
  double rank_tol;
  double fixed_tol;
  double eff_tol;
  double ds_eps;
} ThermoqTolerances;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *thermoq_version(void);

/**
 * Message of the last failed call on this thread, or NULL.
 * Valid until the next call on this thread.
 */
const char *thermoq_last_error_message(void);

/**
 * Error kind name of the last failed call on this thread, or NULL.
 */
const char *thermoq_last_error_kind(void);

/**
 * Parse a CP map from JSON (`{"dim_in", "dim_out", "kraus"}`).
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum ThermoqStatus thermoq_map_from_json(const char *json, struct ThermoqMap **out);

/**
 * Build a CP map from `n_kraus` operators of shape `dim_out x dim_in`,
 * stored back to back as interleaved complex doubles.
 *
 * # Safety
 * `data` must hold `2 * n_kraus * dim_out * dim_in` doubles; `out` must be writable.
 */
enum ThermoqStatus thermoq_map_from_kraus(size_t dim_in,
                                          size_t dim_out,
                                          size_t n_kraus,
                                          const double *data,
                                          struct ThermoqMap **out);

/**
 * # Safety
 * `map` must come from this library and not be used afterwards. NULL is ignored.
 */
void thermoq_map_free(struct ThermoqMap *map);

/**
 * Input and output dimensions.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ThermoqStatus thermoq_map_dims(const struct ThermoqMap *map, size_t *dim_in, size_t *dim_out);

/**
 * Apply the map to a `dim_in x dim_in` matrix, writing `dim_out x dim_out`.
 *
 * # Safety
 * `input` holds `2*dim_in^2` doubles and `output` room for `2*dim_out^2`.
 */
enum ThermoqStatus thermoq_map_apply(const struct ThermoqMap *map,
                                     const double *input,
                                     double *output);

/**
 * Tier verdicts with certificates as JSON. `tol` may be NULL for defaults.
 *
 * # Safety
 * `out` must be writable; free the result with `thermoq_string_free`.
 */
enum ThermoqStatus thermoq_map_classify(const struct ThermoqMap *map,
                                        const struct ThermoqTolerances *tol,
                                        uint64_t seed,
                                        char **out);

/**
 * Fixed-point structure report as JSON.
 *
 * # Safety
 * As for `thermoq_map_classify`.
 */
enum ThermoqStatus thermoq_map_decompose(const struct ThermoqMap *map,
                                         const struct ThermoqTolerances *tol,
                                         char **out);

/**
 * Decide whether a square map is rank non-decreasing.
 *
 * # Safety
 * `verdict` must be writable.
 */
enum ThermoqStatus thermoq_map_rank_nondecreasing(const struct ThermoqMap *map,
                                                  const struct ThermoqTolerances *tol,
                                                  uint64_t seed,
                                                  enum ThermoqVerdict *verdict);

/**
 * Parse an instrument from JSON (`{"labels", "operations"}`).
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum ThermoqStatus thermoq_instrument_from_json(const char *json, struct ThermoqInstrument **out);

/**
 * # Safety
 * `inst` must come from this library and not be used afterwards. NULL is ignored.
 */
void thermoq_instrument_free(struct ThermoqInstrument *inst);

/**
 * Number of outcomes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ThermoqStatus thermoq_instrument_len(const struct ThermoqInstrument *inst, size_t *len);

/**
 * Observable class, per-operation tiers and disturbance properties as JSON.
 *
 * # Safety
 * `out` must be writable; free the result with `thermoq_string_free`.
 */
enum ThermoqStatus thermoq_instrument_classify(const struct ThermoqInstrument *inst,
                                               const struct ThermoqTolerances *tol,
                                               uint64_t seed,
                                               char **out);

/**
 * Disturbance audit against the no-go implications as JSON.
 *
 * # Safety
 * As for `thermoq_instrument_classify`.
 */
enum ThermoqStatus thermoq_instrument_audit(const struct ThermoqInstrument *inst,
                                            const struct ThermoqTolerances *tol,
                                            uint64_t seed,
                                            char **out);

/**
 * Dilation process for an instrument as JSON; `strong != 0` requests the
 * rank non-decreasing construction.
 *
 * # Safety
 * As for `thermoq_instrument_classify`.
 */
enum ThermoqStatus thermoq_instrument_dilate(const struct ThermoqInstrument *inst,
                                             int32_t strong,
                                             const struct ThermoqTolerances *tol,
                                             uint64_t seed,
                                             char **out);

/**
 * # Safety
 * `s` must come from this library. NULL is ignored.
 */
void thermoq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOQ_H */

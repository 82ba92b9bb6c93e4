#ifndef AQKD_H
#define AQKD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AqkdStatus {
  AQKD_STATUS_OK = 0,
  AQKD_STATUS_NULL_POINTER = 1,
  AQKD_STATUS_INVALID_ARGUMENT = 2,
  AQKD_STATUS_CONFIG = 3,
  AQKD_STATUS_IO = 4,
  AQKD_STATUS_OUT_OF_RANGE = 5,
  AQKD_STATUS_PANIC = 6,
} AqkdStatus;

/**
 * Results of a sweep, one curve per configured curve.
 */
typedef struct AqkdResults AqkdResults;

/**
 * Sweep description: lengths, curves, link parameters and pulse budget.
 */
typedef struct AqkdSpec AqkdSpec;

/**
 * One operating point. Mirrors the CSV columns plus sample size and error.
 */
typedef struct AqkdYieldPoint {
  double length_km;
  double gain;
  double mu;
  uint32_t rounds;
  uint64_t pulses;
  double sift_yield;
  double sifted_ber;
  double distilled_yield;
  double distilled_ber;
  double eve_ambiguous;
  double eve_ber;
  double secret_fraction;
  double secret_yield;
  double secret_yield_stderr;
  double takeoka_bound;
} AqkdYieldPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, statically allocated.
 */
const char *aqkd_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *aqkd_last_error(void);

/**
 * A default single-curve spec (plain source, length 0 km, calibrated link).
 */
struct AqkdSpec *aqkd_spec_new(void);

/**
 * The four-curve comparison preset.
 */
struct AqkdSpec *aqkd_spec_figure3(uint64_t seed);

/**
 * The superconducting-detector long-range preset.
 */
struct AqkdSpec *aqkd_spec_stretch(uint64_t seed);

/**
 * # Safety
 * `spec` must be null or a handle from `aqkd_spec_*` not yet freed.
 */
void aqkd_spec_free(struct AqkdSpec *spec);

/**
 * Sets one key using the config-file / CLI flag name, e.g. `"p-dark"`.
 * Curve keys (`G`, `chi`, `mu`, `rounds`) apply to every curve.
 *
 * # Safety
 * `spec` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum AqkdStatus aqkd_spec_set(struct AqkdSpec *spec, const char *key, const char *value);

/**
 * Applies a config file on top of the spec.
 *
 * # Safety
 * `spec` must be a live handle; `path` a NUL-terminated string.
 */
enum AqkdStatus aqkd_spec_load(struct AqkdSpec *spec, const char *path);

/**
 * Checks the spec without running it.
 *
 * # Safety
 * `spec` must be a live handle.
 */
enum AqkdStatus aqkd_spec_validate(const struct AqkdSpec *spec);

/**
 * Best point of the first curve at the first length.
 *
 * # Safety
 * `spec` must be a live handle; `out` must point to writable memory.
 */
enum AqkdStatus aqkd_run_point(const struct AqkdSpec *spec, struct AqkdYieldPoint *out);

/**
 * Runs the full sweep. On success `*out` owns a results handle.
 *
 * # Safety
 * `spec` must be a live handle; `out` must point to writable memory.
 */
enum AqkdStatus aqkd_run_sweep(const struct AqkdSpec *spec, struct AqkdResults **out);

/**
 * # Safety
 * `results` must be null or a handle from `aqkd_run_sweep` not yet freed.
 */
void aqkd_results_free(struct AqkdResults *results);

/**
 * Number of curves; 0 for a null handle.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
size_t aqkd_results_curve_count(const struct AqkdResults *results);

/**
 * Label of curve `curve`, or null when out of range. Owned by the handle.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
const char *aqkd_results_curve_label(const struct AqkdResults *results, size_t curve);

/**
 * Number of points of curve `curve`; 0 when out of range.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
size_t aqkd_results_point_count(const struct AqkdResults *results, size_t curve);

/**
 * # Safety
 * `results` must be a live handle; `out` must point to writable memory.
 */
enum AqkdStatus aqkd_results_point(const struct AqkdResults *results,
                                   size_t curve,
                                   size_t index,
                                   struct AqkdYieldPoint *out);

/**
 * Maximum range of a curve at the given yield floor.
 *
 * # Safety
 * `results` must be a live handle; `out_km` must point to writable memory.
 */
enum AqkdStatus aqkd_results_max_range(const struct AqkdResults *results,
                                       size_t curve,
                                       double floor,
                                       double *out_km);

/**
 * Writes the results as CSV.
 *
 * # Safety
 * `results` must be a live handle; `path` a NUL-terminated string.
 */
enum AqkdStatus aqkd_results_write_csv(const struct AqkdResults *results, const char *path);

/**
 * Capacity bound of a lossy channel with transmittance `eta` in `[0, 1)`.
 *
 * # Safety
 * `out` must point to writable memory.
 */
enum AqkdStatus aqkd_takeoka_bound(double eta, double *out);

/**
 * Binary entropy in bits; arguments outside `(0, 1)` give 0.
 */
double aqkd_binary_entropy(double p);

/**
 * One-way secret fraction, clamped to `[0, 1]`.
 */
double aqkd_secret_fraction(double bob_ber, double eve_ambiguous, double eve_ber, double f_ec);

/**
 * Probability of `n` photons in an amplified coherent pulse with mean
 * signal photons `signal` and mean noise photons `noise`.
 *
 * # Safety
 * `out` must point to writable memory.
 */
enum AqkdStatus aqkd_photon_pmf(double signal, double noise, uint64_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AQKD_H */

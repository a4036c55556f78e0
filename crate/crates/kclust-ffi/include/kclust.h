#ifndef KCLUST_H
#define KCLUST_H

#include <stddef.h>
#include <stdint.h>

typedef enum KcStatus {
  KC_STATUS_OK = 0,
  // An algorithm guarantee or a solution constraint failed.
  KC_STATUS_INVARIANT = 1,
  // Malformed input, bad configuration, or an I/O or parse failure.
  KC_STATUS_CONFIG = 2,
  // Infeasible instance, size limit, or LP solver failure.
  KC_STATUS_INFEASIBLE = 3,
  KC_STATUS_NULL_ARGUMENT = 4,
  KC_STATUS_PANIC = 5,
  // An output buffer was too small; the required length is still reported.
  KC_STATUS_BUFFER_TOO_SMALL = 6,
} KcStatus;

// Opaque LP solution handle, tied to the instance it was solved for.
typedef struct KcFractional KcFractional;

// Opaque instance handle.
typedef struct KcInstance KcInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses an instance from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum KcStatus kc_instance_from_json(const char *json, struct KcInstance **out);

// # Safety
// `inst` must come from `kc_instance_from_json` and not be freed twice.
void kc_instance_free(struct KcInstance *inst);

// Client count, facility count and k.
//
// # Safety
// `inst` must be a live handle; output pointers may be null.
enum KcStatus kc_instance_shape(const struct KcInstance *inst,
                                size_t *n_clients,
                                size_t *n_facilities,
                                size_t *k);

// Solves the LP relaxation.
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum KcStatus kc_solve_lp(const struct KcInstance *inst, struct KcFractional **out);

// # Safety
// `frac` must come from `kc_solve_lp` and not be freed twice.
void kc_fractional_free(struct KcFractional *frac);

// Copies the opening vector into `y[..cap]`; `*len` receives its length.
//
// # Safety
// `frac` must be a live handle; `y` must hold `cap` doubles.
enum KcStatus kc_fractional_opening(const struct KcFractional *frac,
                                    double *y,
                                    size_t cap,
                                    size_t *len,
                                    double *objective);

// One LMP rounding of `frac`; writes the open facilities of `inst`.
//
// # Safety
// Handles must be live and `frac` solved for `inst`; `open` must hold `cap` entries.
enum KcStatus kc_lmp_round(const struct KcInstance *inst,
                           const struct KcFractional *frac,
                           uint64_t seed,
                           size_t *open,
                           size_t cap,
                           size_t *len);

// Exact optimum by enumeration; fails with `Infeasible` above the size limit.
//
// # Safety
// `inst` must be a live handle; `open` must hold `cap` entries.
enum KcStatus kc_brute_force(const struct KcInstance *inst,
                             size_t *open,
                             size_t cap,
                             size_t *len,
                             double *cost);

// Full pipeline with default configuration; `*report` receives the JSON report.
//
// # Safety
// `inst` must be a live handle; `report` must be writable. Free the string
// with `kc_string_free`.
enum KcStatus kc_pipeline(const struct KcInstance *inst,
                          size_t trials,
                          uint64_t seed,
                          char **report);

// Message of the last failure on this thread, or null. Free with `kc_string_free`.
char *kc_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void kc_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KCLUST_H */

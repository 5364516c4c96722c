#ifndef PCMB_H
#define PCMB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PcmbStatus {
  PCMB_STATUS_OK = 0,
  PCMB_STATUS_NULL_POINTER = 1,
  PCMB_STATUS_INVALID_INPUT = 2,
  PCMB_STATUS_DEGENERATE_CHANNEL = 3,
  PCMB_STATUS_UNSUPPORTED_DIMENSION = 4,
  PCMB_STATUS_UNSUPPORTED_MODULATION = 5,
  PCMB_STATUS_INFEASIBLE = 6,
  PCMB_STATUS_CONFIG = 7,
  PCMB_STATUS_IO = 8,
  PCMB_STATUS_PANIC = 9,
} PcmbStatus;

// Perfect space-time block code of dimension 2 or 4.
typedef struct PcmbCode PcmbCode;

// Square QAM constellation.
typedef struct PcmbConstellation PcmbConstellation;

// Simulation settings; each call to `pcmb_simulator_run_point` runs one SNR.
typedef struct PcmbSimulator PcmbSimulator;

// One measured operating point.
typedef struct PcmbPoint {
  double snr_db;
  uint64_t trials;
  uint64_t bit_errors;
  double ber;
  double avg_real_mults;
} PcmbPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pcmb_last_error(char *buf, size_t len);

// Creates the perfect code of dimension `d` (2 or 4).
//
// # Safety
// `out` must be a valid pointer to receive the handle.
enum PcmbStatus pcmb_code_new(size_t d, struct PcmbCode **out);

// # Safety
// `code` must be null or a handle from `pcmb_code_new` not yet freed.
void pcmb_code_free(struct PcmbCode *code);

// Dimension D of the code, or 0 for a null handle.
//
// # Safety
// `code` must be null or a live handle.
size_t pcmb_code_dimension(const struct PcmbCode *code);

// Creates an `m`-QAM constellation (4, 16, 64 or 256).
//
// # Safety
// `out` must be a valid pointer to receive the handle.
enum PcmbStatus pcmb_constellation_new(size_t m, struct PcmbConstellation **out);

// # Safety
// `c` must be null or a handle from `pcmb_constellation_new` not yet freed.
void pcmb_constellation_free(struct PcmbConstellation *c);

// Writes the closed-form upper-triangular R for singular values `lambda`
// (D entries, descending) into `r_out` (D*D doubles, row-major).
//
// # Safety
// `lambda` must hold D doubles and `r_out` D*D writable doubles.
enum PcmbStatus pcmb_closed_form_r(const struct PcmbCode *code,
                                   const double *lambda,
                                   double *r_out);

// Decodes one received block. `y` is the D×D post-beamforming block,
// row-major, interleaved (2*D*D doubles). Writes the D*D symbol indices in
// column-major order (column v is thread v) to `indices_out`.
//
// # Safety
// Pointers must reference arrays of the sizes stated above.
enum PcmbStatus pcmb_decode(const struct PcmbCode *code,
                            const struct PcmbConstellation *constellation,
                            const double *lambda,
                            const double *y,
                            uint32_t *indices_out);

// Creates a simulator for `scheme` ("gc", "fpmb", "gcmb", "bicmb-gc",
// "bicmb-fp", ...). Code rate and frame defaults apply to coded schemes.
//
// # Safety
// `scheme` must be a NUL-terminated string; `out` a valid pointer.
enum PcmbStatus pcmb_simulator_new(const char *scheme,
                                   size_t d,
                                   size_t m,
                                   uint64_t seed,
                                   uint64_t target_errors,
                                   uint64_t max_trials,
                                   struct PcmbSimulator **out);

// # Safety
// `sim` must be null or a handle from `pcmb_simulator_new` not yet freed.
void pcmb_simulator_free(struct PcmbSimulator *sim);

// Measures one SNR point. With `complexity` nonzero the run ignores the
// error target and uses exactly `max_trials` trials.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum PcmbStatus pcmb_simulator_run_point(const struct PcmbSimulator *sim,
                                         double snr_db,
                                         bool complexity,
                                         struct PcmbPoint *out);

// Runs the structural self-checks. `passed_out` receives 1 when all pass.
// The report text goes to the last-error slot when a check fails.
//
// # Safety
// `passed_out` must be a valid pointer.
enum PcmbStatus pcmb_validate(uint64_t seed, size_t instances, bool *passed_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCMB_H */

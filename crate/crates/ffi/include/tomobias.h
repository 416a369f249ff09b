#ifndef TOMOBIAS_H
#define TOMOBIAS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  TB_STATUS_INVALID_ARGUMENT = 1,
  TB_STATUS_ILL_POSED_SCHEME = 2,
  TB_STATUS_INTERNAL_CONSISTENCY = 3,
  TB_STATUS_DEGENERATE_GUESS = 4,
  TB_STATUS_LOAD = 5,
  TB_STATUS_TOO_MANY_FAILURES = 6,
  TB_STATUS_IO = 7,
  TB_STATUS_NULL_POINTER = 8,
  TB_STATUS_BUFFER_TOO_SMALL = 9,
  TB_STATUS_PANIC = 10,
} TbStatus;

typedef enum TbMethod {
  TB_METHOD_LIN = 0,
  TB_METHOD_ML = 1,
  TB_METHOD_LS = 2,
} TbMethod;

// Counted outcome frequencies.
typedef struct TbFrequencies TbFrequencies;

// Hermitian matrix, e.g. a density matrix or an estimate.
typedef struct TbOperator TbOperator;

// Result of a reconstruction.
typedef struct TbReconstruction TbReconstruction;

// Pauli tomography scheme on `n` qubits.
typedef struct TbScheme TbScheme;

// Solver settings; obtain defaults from `tb_solver_options_default`.
typedef struct TbSolverOptions {
  size_t max_iterations;
  double target_tolerance;
  double certificate_tolerance;
  double probability_floor;
  size_t ls_restarts;
} TbSolverOptions;

// Convergence report of a reconstruction.
typedef struct TbReconstructionInfo {
  bool converged;
  bool physical;
  size_t iterations;
  // NaN for linear inversion.
  double target_value;
  double certificate_residual;
} TbReconstructionInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tb_version(void);

// Copies the last error message of this thread into `buf` (truncated,
// always NUL-terminated when `len > 0`). Returns the full message length.
//
// # Safety
// `buf` must be valid for `len` bytes or null with `len == 0`.
size_t tb_last_error_message(char *buf, size_t len);

struct TbSolverOptions tb_solver_options_default(void);

// # Safety
// `out` must be a valid pointer.
enum TbStatus tb_scheme_new(size_t n, struct TbScheme **out);

// # Safety
// `scheme` must come from `tb_scheme_new` or be null.
void tb_scheme_free(struct TbScheme *scheme);

// Hilbert-space dimension `2ⁿ`, 0 for a null handle.
//
// # Safety
// `scheme` must be a live handle or null.
size_t tb_scheme_dim(const struct TbScheme *scheme);

// Number of outcomes `6ⁿ`, 0 for a null handle.
//
// # Safety
// `scheme` must be a live handle or null.
size_t tb_scheme_num_outcomes(const struct TbScheme *scheme);

// Noisy benchmark state from a spec such as `"ghz:4@F=0.8"`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a valid pointer.
enum TbStatus tb_state_from_spec(const char *spec, struct TbOperator **out);

// Hermitian operator from row-major real and imaginary parts of length `dim²`.
//
// # Safety
// `re` and `im` must hold `dim²` values; `out` must be valid.
enum TbStatus tb_operator_from_parts(size_t dim,
                                     const double *re,
                                     const double *im,
                                     struct TbOperator **out);

// # Safety
// `op` must come from this library or be null.
void tb_operator_free(struct TbOperator *op);

// Matrix dimension, 0 for a null handle.
//
// # Safety
// `op` must be a live handle or null.
size_t tb_operator_dim(const struct TbOperator *op);

// Writes row-major real and imaginary parts; each buffer needs `dim²` slots.
//
// # Safety
// `re` and `im` must be valid for `len` values each.
enum TbStatus tb_operator_parts(const struct TbOperator *op, double *re, double *im, size_t len);

// Smallest eigenvalue.
//
// # Safety
// `op` must be live and `out` valid.
enum TbStatus tb_operator_min_eigenvalue(const struct TbOperator *op, double *out);

// Outcome probabilities `tr(ρ M_ν)`, flattened as `ν = 2ⁿ·s + r`.
//
// # Safety
// Handles must be live; `out` must hold `len ≥ 6ⁿ` values.
enum TbStatus tb_born_probabilities(const struct TbScheme *scheme,
                                    const struct TbOperator *state,
                                    double *out,
                                    size_t len);

// Multinomial counts with `events` per setting from the stream
// `(seed, trial, label)`.
//
// # Safety
// `probs` must hold `6ⁿ` values, `label` must be a NUL-terminated string and
// `counts` must hold `len ≥ 6ⁿ` values.
enum TbStatus tb_toss_counts(const struct TbScheme *scheme,
                             const double *probs,
                             uint64_t events,
                             uint64_t seed,
                             uint64_t trial,
                             const char *label,
                             uint64_t *counts,
                             size_t len);

// Frequencies from `6ⁿ` counts, each setting summing to `events`.
//
// # Safety
// `counts` must hold `len` values; `out` must be valid.
enum TbStatus tb_frequencies_from_counts(const struct TbScheme *scheme,
                                         const uint64_t *counts,
                                         size_t len,
                                         uint64_t events,
                                         struct TbFrequencies **out);

// # Safety
// `f` must come from this library or be null.
void tb_frequencies_free(struct TbFrequencies *f);

// Reconstructs with `method`; `options` may be null for defaults.
//
// # Safety
// Handles must be live; `options` null or valid; `out` valid.
enum TbStatus tb_reconstruct(const struct TbScheme *scheme,
                             const struct TbFrequencies *freqs,
                             enum TbMethod method,
                             const struct TbSolverOptions *options,
                             struct TbReconstruction **out);

// # Safety
// `r` must come from `tb_reconstruct` or be null.
void tb_reconstruction_free(struct TbReconstruction *r);

// # Safety
// `r` must be live and `out` valid.
enum TbStatus tb_reconstruction_info(const struct TbReconstruction *r,
                                     struct TbReconstructionInfo *out);

// Copies the estimate into a new operator handle.
//
// # Safety
// `r` must be live and `out` valid.
enum TbStatus tb_reconstruction_operator(const struct TbReconstruction *r, struct TbOperator **out);

// Evaluates a functional such as `"fid"`, `"neg:01|23"` or `"qfi:jz"`;
// `state_spec` names the reference state for fidelities.
//
// # Safety
// Strings must be NUL-terminated; `op` live; `out` valid.
enum TbStatus tb_functional_evaluate(const char *functional,
                                     const char *state_spec,
                                     const struct TbOperator *op,
                                     double *out);

// `√(h² |ln(1−γ)| / (2N_s))`.
//
// # Safety
// `out` must be valid.
enum TbStatus tb_hoeffding_penalty(double h_squared, double gamma, uint64_t events, double *out);

// Witness for `functional` anchored at the state `anchor`, contracted with
// `freqs`: writes `Σ l f` to `value` and the level-`gamma` bound to `bound`.
// `trivial` is set when the anchor offered nothing to witness.
//
// # Safety
// Strings must be NUL-terminated, handles live and output pointers valid.
enum TbStatus tb_witness_bound(const struct TbScheme *scheme,
                               const char *functional,
                               const char *state_spec,
                               const struct TbOperator *anchor,
                               const struct TbFrequencies *freqs,
                               double gamma,
                               double *value,
                               double *bound,
                               bool *trivial);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOMOBIAS_H */

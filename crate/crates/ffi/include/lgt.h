#ifndef LGT_H
#define LGT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LgtStatus {
  LGT_STATUS_OK = 0,
  LGT_STATUS_NULL_POINTER = 1,
  LGT_STATUS_INVALID_UTF8 = 2,
  LGT_STATUS_VALIDATION = 3,
  LGT_STATUS_INDEX = 4,
  LGT_STATUS_CAPACITY = 5,
  LGT_STATUS_LOWERING = 6,
  LGT_STATUS_UNSUPPORTED_GATE = 7,
  LGT_STATUS_DIVERGENCE = 8,
  LGT_STATUS_NO_DATA = 9,
  LGT_STATUS_EXHAUSTED = 10,
  LGT_STATUS_PARSE = 11,
  LGT_STATUS_MISSING_ARTIFACT = 12,
  LGT_STATUS_CONVERGENCE = 13,
  LGT_STATUS_IO = 14,
  LGT_STATUS_BUFFER_TOO_SMALL = 15,
  LGT_STATUS_PANIC = 16,
} LgtStatus;

/**
 * Circuit, possibly with free parameter slots.
 */
typedef struct LgtCircuit LgtCircuit;

/**
 * Fidelity cost of a template against a fixed target unitary.
 */
typedef struct LgtObjective LgtObjective;

/**
 * Statevector over `n` qubits, qubit 0 least significant.
 */
typedef struct LgtState LgtState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *lgt_last_error_message(void);

void lgt_clear_error(void);

/**
 * Library version as a static string.
 */
const char *lgt_version(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lgt_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum LgtStatus lgt_state_new(size_t n_qubits, struct LgtState **out);

/**
 * # Safety
 * `state` must be null or a live handle from [`lgt_state_new`].
 */
void lgt_state_free(struct LgtState *state);

/**
 * # Safety
 * `state` must be a live handle.
 */
size_t lgt_state_n_qubits(const struct LgtState *state);

/**
 * Writes the `2^n` outcome probabilities.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum LgtStatus lgt_state_probabilities(const struct LgtState *state, double *out, size_t len);

/**
 * Parses the line-based circuit text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum LgtStatus lgt_circuit_from_text(const char *text, struct LgtCircuit **out);

/**
 * The 30-parameter hopping template.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LgtStatus lgt_circuit_hopping_template(struct LgtCircuit **out);

/**
 * # Safety
 * `circuit` must be null or a live handle.
 */
void lgt_circuit_free(struct LgtCircuit *circuit);

/**
 * Text form; free with [`lgt_string_free`]. Null on error.
 *
 * # Safety
 * `circuit` must be a live handle.
 */
char *lgt_circuit_to_text(const struct LgtCircuit *circuit);

/**
 * # Safety
 * `circuit` must be a live handle.
 */
size_t lgt_circuit_n_qubits(const struct LgtCircuit *circuit);

/**
 * # Safety
 * `circuit` must be a live handle.
 */
size_t lgt_circuit_n_params(const struct LgtCircuit *circuit);

/**
 * # Safety
 * `circuit` must be a live handle.
 */
size_t lgt_circuit_two_qubit_count(const struct LgtCircuit *circuit);

/**
 * Binds `params` and applies the circuit to `state` in place.
 *
 * # Safety
 * Handles must be live; `params` must hold `n_params` doubles.
 */
enum LgtStatus lgt_circuit_apply(const struct LgtCircuit *circuit,
                                 const double *params,
                                 size_t n_params,
                                 struct LgtState *state);

/**
 * Objective of `template` against the hopping block `Ĉ(J, dt)`.
 *
 * # Safety
 * `template` must be a live handle; `out` a valid pointer.
 */
enum LgtStatus lgt_objective_hopping(double j,
                                     double dt,
                                     const struct LgtCircuit *template_,
                                     struct LgtObjective **out);

/**
 * Objective of `template` against the bond block `B̂(U, dt)`.
 *
 * # Safety
 * `template` must be a live handle; `out` a valid pointer.
 */
enum LgtStatus lgt_objective_bond(double u,
                                  double dt,
                                  const struct LgtCircuit *template_,
                                  struct LgtObjective **out);

/**
 * # Safety
 * `objective` must be null or a live handle.
 */
void lgt_objective_free(struct LgtObjective *objective);

/**
 * # Safety
 * `objective` must be a live handle.
 */
size_t lgt_objective_dim(const struct LgtObjective *objective);

/**
 * `1 − F` at `x`.
 *
 * # Safety
 * `x` must hold `d` doubles; `cost` must be writable.
 */
enum LgtStatus lgt_objective_cost(const struct LgtObjective *objective,
                                  const double *x,
                                  size_t d,
                                  double *cost);

/**
 * Exact gradient at `x`, written to `grad[0..d]`.
 *
 * # Safety
 * `x` and `grad` must hold `d` doubles.
 */
enum LgtStatus lgt_objective_gradient(const struct LgtObjective *objective,
                                      const double *x,
                                      size_t d,
                                      double *grad);

/**
 * Seeded multi-start optimization; writes the best point and its cost.
 * `optimizer` is one of `ipg`, `gd`, `adam`, `lbfgs`.
 *
 * # Safety
 * Strings NUL-terminated; `best_x` must hold `d` doubles.
 */
enum LgtStatus lgt_optimize(const struct LgtObjective *objective,
                            const char *optimizer,
                            size_t trials,
                            size_t iterations,
                            uint64_t seed,
                            double *best_x,
                            size_t d,
                            double *best_cost);

/**
 * Two-qubit gates per Trotter step for `variant` (`direct`, `gbo`,
 * `vne`) at `n_sites`.
 *
 * # Safety
 * `variant` NUL-terminated; `out` writable.
 */
enum LgtStatus lgt_gate_cost(const char *variant, size_t n_sites, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LGT_H */

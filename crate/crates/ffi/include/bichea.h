#ifndef BICHEA_H
#define BICHEA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BicheaStatus {
  BICHEA_STATUS_OK = 0,
  BICHEA_STATUS_NULL_POINTER = 1,
  BICHEA_STATUS_INVALID_UTF8 = 2,
  BICHEA_STATUS_UNKNOWN_PROBLEM = 3,
  BICHEA_STATUS_INVALID_INPUT = 4,
  BICHEA_STATUS_UNVERIFIED = 5,
  BICHEA_STATUS_BUFFER_TOO_SMALL = 6,
  BICHEA_STATUS_INTERNAL = 7,
} BicheaStatus;

typedef enum BicheaProfile {
  BICHEA_PROFILE_OPTIMISTIC = 0,
  BICHEA_PROFILE_PESSIMISTIC = 1,
} BicheaProfile;

typedef enum BicheaWilcoxonMode {
  BICHEA_WILCOXON_MODE_EXACT = 0,
  BICHEA_WILCOXON_MODE_NORMAL = 1,
  BICHEA_WILCOXON_MODE_AUTO = 2,
} BicheaWilcoxonMode;

/**
 * Solver settings; starts at the defaults.
 */
typedef struct BicheaConfig BicheaConfig;

/**
 * A registered benchmark problem.
 */
typedef struct BicheaProblem BicheaProblem;

/**
 * Outcome of one solver run.
 */
typedef struct BicheaResult BicheaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len` bytes. Returns the full message length without the
 * terminator, so a caller can size a retry.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
size_t bichea_last_error(char *buf, size_t len);

/**
 * Looks up a registered problem by id.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be writable.
 */
enum BicheaStatus bichea_problem_get(const char *id, struct BicheaProblem **out);

/**
 * # Safety
 * `problem` must come from [`bichea_problem_get`] and not be used after.
 */
void bichea_problem_free(struct BicheaProblem *problem);

/**
 * Variable counts of both levels.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BicheaStatus bichea_problem_dims(const struct BicheaProblem *problem,
                                      size_t *upper_dim,
                                      size_t *lower_dim);

/**
 * Best-known `(F, f)` of the problem.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BicheaStatus bichea_problem_best_known(const struct BicheaProblem *problem,
                                            double *upper,
                                            double *lower);

/**
 * Monte Carlo share of the variable box satisfying every explicit
 * constraint.
 *
 * # Safety
 * `problem` and `out` must be valid.
 */
enum BicheaStatus bichea_problem_rho(const struct BicheaProblem *problem,
                                     size_t samples,
                                     size_t repeats,
                                     uint64_t seed,
                                     double *out);

/**
 * A configuration holding the default settings.
 */
struct BicheaConfig *bichea_config_new(void);

/**
 * # Safety
 * `config` must come from [`bichea_config_new`] and not be used after.
 */
void bichea_config_free(struct BicheaConfig *config);

/**
 * Master seed of the run's random streams. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_seed(struct BicheaConfig *config, uint64_t value);

/**
 * Population size. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_population(struct BicheaConfig *config, size_t value);

/**
 * Generation budget. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_generations(struct BicheaConfig *config, size_t value);

/**
 * Traversal threshold `T`. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_threshold(struct BicheaConfig *config, uint32_t value);

/**
 * Traversal coefficient `r`. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_r(struct BicheaConfig *config, double value);

/**
 * Crossover rate. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_crossover_rate(struct BicheaConfig *config, double value);

/**
 * Clone-count exponent `beta`. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_beta(struct BicheaConfig *config, double value);

/**
 * Equality tolerance. Values are checked when solving.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_delta_eq(struct BicheaConfig *config, double value);

/**
 * Sets the profile from a [`BicheaProfile`] code.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum BicheaStatus bichea_config_set_profile(struct BicheaConfig *config, uint32_t profile);

/**
 * Runs the solver once. The configuration is validated first.
 *
 * # Safety
 * `problem` and `config` must be live handles; `out` must be writable.
 */
enum BicheaStatus bichea_solve(const struct BicheaProblem *problem,
                               const struct BicheaConfig *config,
                               struct BicheaResult **out);

/**
 * # Safety
 * `result` must come from [`bichea_solve`] and not be used after.
 */
void bichea_result_free(struct BicheaResult *result);

/**
 * Final `(F, f)` and whether every constraint holds there.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BicheaStatus bichea_result_fitness(const struct BicheaResult *result,
                                        double *upper,
                                        double *lower,
                                        bool *feasible);

/**
 * Objective evaluations spent by the run.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BicheaStatus bichea_result_evaluations(const struct BicheaResult *result, uint64_t *out);

/**
 * Copies the final upper-level variables. `written` always receives the
 * required length, also when the buffer is too small.
 *
 * # Safety
 * `buf` must be valid for `len` values.
 */
enum BicheaStatus bichea_result_upper_vars(const struct BicheaResult *result,
                                           double *buf,
                                           size_t len,
                                           size_t *written);

/**
 * Lower-level counterpart of [`bichea_result_upper_vars`].
 *
 * # Safety
 * `buf` must be valid for `len` values.
 */
enum BicheaStatus bichea_result_lower_vars(const struct BicheaResult *result,
                                           double *buf,
                                           size_t len,
                                           size_t *written);

/**
 * Two-tailed rank-sum p-value of `a` against `b`; `mode` is a
 * [`BicheaWilcoxonMode`] code.
 *
 * # Safety
 * `a` and `b` must be valid for `na` and `nb` values.
 */
enum BicheaStatus bichea_wilcoxon(const double *a,
                                  size_t na,
                                  const double *b,
                                  size_t nb,
                                  uint32_t mode,
                                  double *out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bichea_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BICHEA_H */

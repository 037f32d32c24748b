#ifndef SEMIWALK_H
#define SEMIWALK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Zero is success.
 */
typedef enum SwStatus {
  SW_STATUS_OK = 0,
  SW_STATUS_NULL_POINTER = 1,
  SW_STATUS_INVALID_PARAMETER = 2,
  SW_STATUS_CONTRACT_VIOLATION = 3,
  SW_STATUS_UNSUPPORTED = 4,
  SW_STATUS_NOT_CONVERGED = 5,
  SW_STATUS_NO_COMPOSITION = 6,
  SW_STATUS_COST_EXCEEDED = 7,
  SW_STATUS_INSUFFICIENT_DATA = 8,
  SW_STATUS_INTERNAL = 9,
} SwStatus;

/**
 * Integrated Chapman–Kolmogorov system with its occupancy ratios.
 */
typedef struct SwCkSolution SwCkSolution;

/**
 * Scaled lattice family `F(x / a_i)` in `dim` coordinates.
 */
typedef struct SwFamily SwFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string; static, never free it.
 */
const char *sw_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sw_last_error(void);

/**
 * `gcd` of the positive support of `B` and `B̃`.
 *
 * # Safety
 * Each array must hold its stated count of values; `out_num` and `out_den` must be writable.
 */
enum SwStatus sw_gcd_of_support(const int64_t *b_num,
                                const int64_t *b_den,
                                size_t nb,
                                const int64_t *bt_num,
                                const int64_t *bt_den,
                                size_t nbt,
                                int64_t *out_num,
                                int64_t *out_den);

/**
 * Integrates the system with positive sizes `r_sizes` (probabilities `r_probs`),
 * negative sizes `rt_sizes` (probabilities `rt_probs`) and sign probability `p_plus`
 * up to `t_end`; sizes are in lattice units.
 *
 * # Safety
 * Arrays must hold their stated counts; `out` must be writable. Free the result with [`sw_ck_free`].
 */
enum SwStatus sw_ck_solve(double p_plus,
                          const uint64_t *r_sizes,
                          const double *r_probs,
                          size_t nr,
                          const uint64_t *rt_sizes,
                          const double *rt_probs,
                          size_t nrt,
                          double t_end,
                          struct SwCkSolution **out);

/**
 * Number of extracted ratios `q_0..q_{len-1}`; 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle from [`sw_ck_solve`].
 */
size_t sw_ck_q_len(const struct SwCkSolution *sol);

/**
 * Ratio `q_n` and its extraction error.
 *
 * # Safety
 * `sol` must be a live handle; `out_q` must be writable; `out_err` may be null.
 */
enum SwStatus sw_ck_q(const struct SwCkSolution *sol, size_t n, double *out_q, double *out_err);

/**
 * 1 when the ratios reached a plateau, 0 otherwise or for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
int32_t sw_ck_converged(const struct SwCkSolution *sol);

/**
 * # Safety
 * `sol` must be null or a handle from [`sw_ck_solve`] not yet freed.
 */
void sw_ck_free(struct SwCkSolution *sol);

/**
 * Builds a family from the base atoms `values[k] = val_num[k] / val_den[k]` with masses `probs[k]`.
 *
 * # Safety
 * Arrays must hold `n` values; `out` must be writable. Free with [`sw_family_free`].
 */
enum SwStatus sw_family_lattice(const int64_t *val_num,
                                const int64_t *val_den,
                                const double *probs,
                                size_t n,
                                size_t dim,
                                struct SwFamily **out);

/**
 * # Safety
 * `fam` must be null or a handle from [`sw_family_lattice`] not yet freed.
 */
void sw_family_free(struct SwFamily *fam);

/**
 * Exact conditional outward-step probability of member `a` at norm level `z`.
 *
 * # Safety
 * `fam` must be live; `a_num`/`a_den` must hold `dim` values; `out_ratio` must be writable;
 * `out_err` may be null.
 */
enum SwStatus sw_exact_nd(const struct SwFamily *fam,
                          const int64_t *a_num,
                          const int64_t *a_den,
                          int64_t z_num,
                          int64_t z_den,
                          double *out_ratio,
                          double *out_err);

/**
 * Monte Carlo estimate of the same probability from `paths` plain-walk paths
 * over the default horizon ladder.
 *
 * # Safety
 * As [`sw_exact_nd`]; `out_value` must be writable and `out_stderr` may be null.
 */
enum SwStatus sw_estimate_outward(const struct SwFamily *fam,
                                  const int64_t *a_num,
                                  const int64_t *a_den,
                                  int64_t z_num,
                                  int64_t z_den,
                                  uint64_t paths,
                                  uint64_t seed,
                                  double *out_value,
                                  double *out_stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMIWALK_H */

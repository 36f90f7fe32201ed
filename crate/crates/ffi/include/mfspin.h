#ifndef MFSPIN_H
#define MFSPIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfsStatus {
  MFS_STATUS_OK = 0,
  MFS_STATUS_NULL_POINTER = 1,
  MFS_STATUS_INVALID = 2,
  MFS_STATUS_NUMERICAL = 3,
  MFS_STATUS_RESOURCE = 4,
  MFS_STATUS_PANIC = 5,
} MfsStatus;

/**
 * Exact magnetization distribution of one model.
 */
typedef struct MfsDistribution MfsDistribution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *mfs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mfs_version(void);

/**
 * Curie-Weiss distribution with `n` spins.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MfsStatus mfs_distribution_new_cw(size_t n,
                                       double coupling,
                                       double field,
                                       struct MfsDistribution **out);

/**
 * `k`-species distribution; `coupling` is `k * k` row-major and symmetric.
 *
 * # Safety
 * `sizes` and `field` must hold `k` values, `coupling` `k * k`, and `out`
 * must be a valid pointer to a handle slot.
 */
enum MfsStatus mfs_distribution_new_ms(size_t k,
                                       const size_t *sizes,
                                       const double *coupling,
                                       const double *field,
                                       struct MfsDistribution **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `dist` must be NULL or a handle not yet freed.
 */
void mfs_distribution_free(struct MfsDistribution *dist);

/**
 * Number of grid cells and of species.
 *
 * # Safety
 * `dist` must be a live handle; `cells` and `species` valid pointers.
 */
enum MfsStatus mfs_distribution_shape(const struct MfsDistribution *dist,
                                      size_t *cells,
                                      size_t *species);

/**
 * Copies the probability table (`cells` values) into `out`.
 *
 * # Safety
 * `dist` must be a live handle and `out` hold `len` values.
 */
enum MfsStatus mfs_distribution_probabilities(const struct MfsDistribution *dist,
                                              double *out,
                                              size_t len);

/**
 * Exact `ω(m_l)` into `mean` (`k` values) and `χ_N` into `chi`
 * (`k * k`, row-major).
 *
 * # Safety
 * `dist` must be a live handle; `mean` and `chi` sized as above.
 */
enum MfsStatus mfs_distribution_moments(const struct MfsDistribution *dist,
                                        double *mean,
                                        double *chi);

/**
 * Draws `m` up-spin count vectors into `counts` (`m * k` values, one
 * vector per draw). The same seed gives the same draws.
 *
 * # Safety
 * `dist` must be a live handle and `counts` hold `m * k` values.
 */
enum MfsStatus mfs_distribution_sample(const struct MfsDistribution *dist,
                                       size_t m,
                                       uint64_t seed,
                                       uint32_t *counts);

/**
 * Fixed points of `m = tanh(J m + h)`, ascending. Writes up to `cap`
 * magnetizations and stability flags; `count` receives the total number.
 *
 * # Safety
 * `magnetization` and `stable` must hold `cap` values (may be NULL when
 * `cap` is 0); `count` must be valid.
 */
enum MfsStatus mfs_solve_cw(double coupling,
                            double field,
                            double *magnetization,
                            uint8_t *stable,
                            size_t cap,
                            size_t *count);

/**
 * `J = 1/(1 − m²) − 1/χ`, `h = atanh(m) − J m`.
 *
 * # Safety
 * `coupling` and `field` must be valid pointers.
 */
enum MfsStatus mfs_cw_invert(double m, double chi, double *coupling, double *field);

/**
 * `k`-species inversion from magnetizations `m`, susceptibility `chi`
 * (`k * k`) and population fractions `alpha`.
 *
 * # Safety
 * `m`, `alpha`, `field` must hold `k` values; `chi`, `coupling` `k * k`.
 */
enum MfsStatus mfs_ms_invert(size_t k,
                             const double *m,
                             const double *chi,
                             const double *alpha,
                             double *coupling,
                             double *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFSPIN_H */

#ifndef WIPRATES_H
#define WIPRATES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WR_OK 0

/**
 * Invalid argument, configuration or I/O failure.
 */
#define WR_ERR_INPUT 1

/**
 * Non-convergence, truncation or a failed fit.
 */
#define WR_ERR_NUMERICAL 2

/**
 * A problem size exceeded a solver cap.
 */
#define WR_ERR_SIZE 3

#define WR_ERR_NULL 4

#define WR_ERR_PANIC 5

#define WR_MAP_DOUBLING 0

#define WR_MAP_LSV 1

#define WR_MAP_INDUCED 2

#define WR_ROOF_CONSTANT 0

#define WR_ROOF_ONE_PLUS_Y 1

#define WR_FIELD_PSI 0

#define WR_FIELD_M 1

#define WR_FIELD_CHI 2

#define WR_FIELD_BREVE_W 3

#define WR_FIELD_DENSITY 4

/**
 * Result of a martingale-coboundary decomposition on an Ulam grid.
 */
typedef struct WrDecomposition WrDecomposition;

/**
 * A suspension flow over one of the supported base maps.
 */
typedef struct WrSystem WrSystem;

/**
 * `L¹(μ)` diagnostics of a decomposition.
 */
typedef struct {
  double reconstruction;
  double kernel;
  double breve_mean;
  double series;
} WrResiduals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *wr_last_error_message(void);

/**
 * Creates a system. `beta` is ignored for the doubling map and
 * `roof_height` for the `1 + y` roof.
 */
int32_t wr_system_new(int32_t map,
                      double beta,
                      int32_t roof,
                      double roof_height,
                      WrSystem **out_system);

/**
 * Releases a system; null is ignored.
 *
 * # Safety
 * `system` must come from `wr_system_new` and not have been freed.
 */
void wr_system_free(WrSystem *system);

/**
 * One step of the base map.
 */
int32_t wr_system_step(const WrSystem *system, double y, double *out_y);

/**
 * Flows the state `(y, u)` forward for time `t`.
 */
int32_t wr_system_evolve(const WrSystem *system,
                         double y,
                         double u,
                         double t,
                         double *out_y,
                         double *out_u);

/**
 * Samples `samples` paths of `W_n` on the grid `k/m`, row-major into
 * `out_values` (`samples * (m + 1)` values). A positive
 * `centering_budget` first subtracts a Birkhoff-average mean over that
 * much flow time; zero uses the observable as given.
 */
int32_t wr_wn_paths(const WrSystem *system,
                    const char *observable_name,
                    uint64_t n,
                    size_t m,
                    size_t samples,
                    uint64_t seed,
                    uint64_t centering_budget,
                    double *out_values,
                    size_t out_len);

/**
 * Exact `𝒲_q` between two clouds of `count` paths with `points` values
 * each (row-major), under the sup distance on the grid.
 */
int32_t wr_wasserstein_paths(const double *a,
                             const double *b,
                             size_t count,
                             size_t points,
                             double q,
                             double *out_distance);

/**
 * Exact `𝒲_q` between two equal-size samples on the line.
 */
int32_t wr_wasserstein_1d(const double *a,
                          const double *b,
                          size_t count,
                          double q,
                          double *out_distance);

/**
 * The modulus `ω_q(t)`.
 */
int32_t wr_omega(double q, double t, double *out_value);

/**
 * The predicted rate at horizon `n` for moment order `p`.
 */
int32_t wr_theoretical_rate(double p, double n, double *out_value);

/**
 * Decomposes the excursion integral of the observable on `cells` Ulam cells.
 */
int32_t wr_decompose(const WrSystem *system,
                     const char *observable_name,
                     size_t cells,
                     double series_tol,
                     WrDecomposition **out_decomposition);

/**
 * Releases a decomposition; null is ignored.
 *
 * # Safety
 * `decomposition` must come from `wr_decompose` and not have been freed.
 */
void wr_decomposition_free(WrDecomposition *decomposition);

/**
 * Number of grid values per field; 0 for null.
 */
size_t wr_decomposition_len(const WrDecomposition *decomposition);

int32_t wr_decomposition_sigma2(const WrDecomposition *decomposition, double *out_sigma2);

int32_t wr_decomposition_residuals(const WrDecomposition *decomposition,
                                   WrResiduals *out_residuals);

/**
 * Copies one `WR_FIELD_*` grid function into `out_values`, which must
 * hold exactly `wr_decomposition_len` values.
 */
int32_t wr_decomposition_field(const WrDecomposition *decomposition,
                               int32_t field,
                               double *out_values,
                               size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WIPRATES_H */

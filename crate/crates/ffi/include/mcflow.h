#ifndef MCFLOW_H
#define MCFLOW_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum McflowStatus {
  MCFLOW_OK = 0,
  MCFLOW_ERR_NULL_POINTER = 1,
  MCFLOW_ERR_INVALID_INPUT = 2,
  MCFLOW_ERR_NON_MANIFOLD = 3,
  MCFLOW_ERR_DEGENERATE = 4,
  MCFLOW_ERR_FIELD_MISMATCH = 5,
  MCFLOW_ERR_SOLVE_FAILURE = 6,
  MCFLOW_ERR_INSUFFICIENT_DATA = 7,
  MCFLOW_ERR_TRAJECTORY_TOO_SHORT = 8,
  MCFLOW_ERR_UNSUPPORTED_DIMENSION = 9,
  MCFLOW_ERR_ZERO_DENOMINATOR = 10,
  MCFLOW_ERR_EXPONENT_ORDER = 11,
  MCFLOW_ERR_SUBCRITICAL_EXPONENT = 12,
  MCFLOW_ERR_EMPTY_REGION = 13,
  MCFLOW_ERR_TRAJECTORY_RANGE = 14,
  MCFLOW_ERR_BELOW_THRESHOLD = 15,
  MCFLOW_ERR_DOMAIN = 16,
  MCFLOW_ERR_MISSING_MONITORS = 17,
  MCFLOW_ERR_OUT_OF_RANGE = 18,
  MCFLOW_ERR_SHAPE_MISMATCH = 19,
  MCFLOW_ERR_PARSE = 20,
  MCFLOW_ERR_IO = 21,
  MCFLOW_ERR_BUFFER_TOO_SMALL = 22,
  MCFLOW_ERR_PANIC = 99,
} McflowStatus;

// Flow status codes reported by `mcflow_trajectory_info`.
typedef enum McflowFlowStatus {
  MCFLOW_FLOW_RUNNING = 0,
  MCFLOW_FLOW_REACHED_T_END = 1,
  MCFLOW_FLOW_SINGULARITY_DETECTED = 2,
  MCFLOW_FLOW_STEP_UNDERFLOW = 3,
} McflowFlowStatus;

typedef enum McflowFunctionalKind {
  // `∫ (∫|A|^p)^{q/p} dt`
  MCFLOW_MIXED_NORM = 0,
  // `∫∫ |A|^{n+2} / ln(2 + |A|)`
  MCFLOW_SUBCRITICAL_LOG = 1,
  // `∫∫ |A|^{n+3}`
  MCFLOW_SUPERCRITICAL = 2,
} McflowFunctionalKind;

// Closed polygon or triangle mesh.
typedef struct McflowSurface McflowSurface;

// Recorded flow from `t = 0` to its stop.
typedef struct McflowTrajectory McflowTrajectory;

// Scalar summary of a surface.
typedef struct McflowSurfaceInfo {
  // 1 for curves, 2 for meshes.
  uint32_t n;
  size_t vertex_count;
  double measure;
  double max_abs_a;
} McflowSurfaceInfo;

// Subset of the flow configuration exposed over the ABI.
typedef struct McflowFlowOptions {
  // Stop time; negative runs until a singularity is detected.
  double t_end;
  double c_stab;
  // Non-zero enables adaptive remeshing.
  int32_t remesh;
  size_t max_steps;
} McflowFlowOptions;

typedef struct McflowTrajectoryInfo {
  enum McflowFlowStatus status;
  size_t snapshot_count;
  double final_time;
  double final_sup_a;
} McflowTrajectoryInfo;

typedef struct McflowSingularFit {
  double t_est;
  double alpha;
  double residual;
  size_t points;
} McflowSingularFit;

typedef struct McflowFunctional {
  enum McflowFunctionalKind kind;
  // Used by the mixed norm only.
  double p;
  double q;
} McflowFunctional;

typedef struct McflowMoserConstants {
  double nu;
  double c_a;
  double c_z;
  // `C_b(β)`; may be `inf` when it overflows, see `ln_c_b`.
  double c_b;
  double ln_c_b;
  double big_lambda;
} McflowMoserConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// NUL-terminated library version.
const char *mcflow_version(void);

// Message for the calling thread's last failure; empty after success.
const char *mcflow_last_error(void);

// Reads a `.obj` mesh or a `.json` curve.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum McflowStatus mcflow_surface_read(const char *path, struct McflowSurface **out);

// Icosphere with `20·4^level` faces.
//
// # Safety
// `out` must be writable.
enum McflowStatus mcflow_surface_icosphere(uint32_t level,
                                           double radius,
                                           struct McflowSurface **out);

// Regular `k`-gon in the plane.
//
// # Safety
// `out` must be writable.
enum McflowStatus mcflow_surface_polygon(size_t k, double radius, struct McflowSurface **out);

// Triangle mesh from `3·vertex_count` coordinates and `3·triangle_count`
// zero-based indices.
//
// # Safety
// The arrays must hold the stated number of elements; `out` must be writable.
enum McflowStatus mcflow_surface_from_mesh(const double *coords,
                                           size_t vertex_count,
                                           const uint32_t *indices,
                                           size_t triangle_count,
                                           struct McflowSurface **out);

// Releases a surface; null is ignored.
//
// # Safety
// `surface` must come from this library and not be used afterwards.
void mcflow_surface_free(struct McflowSurface *surface);

// # Safety
// `surface` must be a live handle; `out` must be writable.
enum McflowStatus mcflow_surface_info(const struct McflowSurface *surface,
                                      struct McflowSurfaceInfo *out);

// Michael–Simon ratio of a non-negative vertex field.
//
// # Safety
// `field` must hold `len` values; `out` must be writable.
enum McflowStatus mcflow_michael_simon_ratio(const struct McflowSurface *surface,
                                             const double *field,
                                             size_t len,
                                             double *out);

struct McflowFlowOptions mcflow_flow_options_default(void);

// Evolves `surface`; a null `options` uses the defaults.
//
// # Safety
// `surface` must be a live handle, `options` null or valid, `out` writable.
enum McflowStatus mcflow_flow_run(const struct McflowSurface *surface,
                                  const struct McflowFlowOptions *options,
                                  struct McflowTrajectory **out);

// # Safety
// `traj` must come from this library and not be used afterwards.
void mcflow_trajectory_free(struct McflowTrajectory *traj);

// # Safety
// `traj` must be a live handle; `out` must be writable.
enum McflowStatus mcflow_trajectory_info(const struct McflowTrajectory *traj,
                                         struct McflowTrajectoryInfo *out);

// Copies snapshot times and `sup|A|` into caller buffers of `capacity`
// entries each (either may be null). Fails with
// `MCFLOW_ERR_BUFFER_TOO_SMALL` if `capacity` is below the snapshot count.
//
// # Safety
// Non-null buffers must hold `capacity` doubles.
enum McflowStatus mcflow_trajectory_series(const struct McflowTrajectory *traj,
                                           double *times,
                                           double *sup_a,
                                           size_t capacity);

// Fits `log sup|A| = −α log(T − t) + β` to the final decade.
//
// # Safety
// `traj` must be a live handle; `out` must be writable.
enum McflowStatus mcflow_trajectory_singular_time(const struct McflowTrajectory *traj,
                                                  struct McflowSingularFit *out);

// Cumulative value of `functional` at time `t` along `traj`.
//
// # Safety
// Pointers must be valid; `out` must be writable.
enum McflowStatus mcflow_trajectory_cumulative(const struct McflowTrajectory *traj,
                                               const struct McflowFunctional *functional,
                                               double t,
                                               double *out);

// Exact cumulative value on the shrinking sphere `R(t)² = R₀² − 2nt`.
//
// # Safety
// Pointers must be valid; `out` must be writable.
enum McflowStatus mcflow_sphere_cumulative(uint32_t n,
                                           double r0,
                                           const struct McflowFunctional *functional,
                                           double t,
                                           double *out);

// Exact sphere radius at time `t`.
//
// # Safety
// `out` must be writable.
enum McflowStatus mcflow_sphere_radius(uint32_t n, double r0, double t, double *out);

// Moser iteration constants; `beta` must be at least 2.
//
// # Safety
// `out` must be writable.
enum McflowStatus mcflow_moser_constants(uint32_t n,
                                         double q,
                                         double c0,
                                         double c1,
                                         double c_n,
                                         double beta,
                                         struct McflowMoserConstants *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCFLOW_H */

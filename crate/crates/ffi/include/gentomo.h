#ifndef GENTOMO_H
#define GENTOMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible call.
typedef enum GtStatus {
  GT_STATUS_OK = 0,
  GT_STATUS_NULL_POINTER = 1,
  GT_STATUS_INVALID_ARGUMENT = 2,
  GT_STATUS_INVALID_GRID = 3,
  GT_STATUS_DIMENSION_MISMATCH = 4,
  GT_STATUS_GRID_MISMATCH = 5,
  GT_STATUS_TAG_MISMATCH = 6,
  GT_STATUS_SINGULAR = 7,
  GT_STATUS_DEGENERATE = 8,
  GT_STATUS_FORMAT = 9,
  GT_STATUS_IO = 10,
  GT_STATUS_PANIC = 11,
} GtStatus;

typedef struct GtFamily GtFamily;

typedef struct GtField GtField;

typedef struct GtPhantom GtPhantom;

typedef struct GtTomogram GtTomogram;

// One uniform axis: `count` points from `min` to `max` inclusive.
typedef struct GtAxis {
  double min;
  double max;
  size_t count;
} GtAxis;

// Summary of a forward transform.
typedef struct GtForwardSummary {
  double source_mass;
  double max_overflow;
  size_t singular_cells;
  size_t total_cells;
  size_t degenerate_params;
} GtForwardSummary;

// Diagnostics of an inversion.
typedef struct GtInverseDiagnostics {
  double imag_residual_ratio;
  double boundary_decay;
  // 1 when `boundary_decay` exceeds the requested floor.
  int32_t decay_warning;
  size_t singular_points;
} GtInverseDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next failing call.
const char *gt_last_error(void);

// Library version as a static NUL-terminated string.
const char *gt_version(void);

// Gaussian with a row-major `ndim`×`ndim` covariance; `cov` may be NULL for the identity.
//
// # Safety
// `mean` must hold `ndim` values, `cov` (if not NULL) `ndim*ndim`.
enum GtStatus gt_phantom_gaussian(size_t ndim,
                                  const double *mean,
                                  const double *cov,
                                  struct GtPhantom **out);

// Uniform ball.
//
// # Safety
// `center` must hold `ndim` values.
enum GtStatus gt_phantom_ball(size_t ndim,
                              const double *center,
                              double radius,
                              struct GtPhantom **out);

// Phantom from the text of a `key = value` description. Any grid in it is ignored.
//
// # Safety
// `text` must be a NUL-terminated string.
enum GtStatus gt_phantom_parse(const char *text, struct GtPhantom **out);

// # Safety
// `p` must be NULL or a phantom handle not yet freed.
void gt_phantom_free(struct GtPhantom *p);

// # Safety
// `p` must be a live phantom handle.
size_t gt_phantom_ndim(const struct GtPhantom *p);

// Density at one point, or NaN on a NULL argument.
//
// # Safety
// `q` must hold `ndim` values of the phantom.
double gt_phantom_density(const struct GtPhantom *p, const double *q);

// Samples the phantom at the nodes of a grid.
//
// # Safety
// `axes` must hold `ndim` entries.
enum GtStatus gt_phantom_sample(const struct GtPhantom *p,
                                const struct GtAxis *axes,
                                size_t ndim,
                                struct GtField **out);

// Family from its name (`hyperplane`, `circle`, `hyperbola`, `hyperboloid`,
// `quadric`, `hybrid`). `matrix` (row-major `ndim*ndim`) is required for
// quadric and hybrid and must be NULL otherwise; `split` lists the linear
// axes of a hybrid form and must be NULL otherwise.
//
// # Safety
// `name` must be NUL-terminated; non-NULL arrays must hold the stated lengths.
enum GtStatus gt_family_new(const char *name,
                            size_t ndim,
                            const double *matrix,
                            size_t matrix_len,
                            const size_t *split,
                            size_t split_len,
                            struct GtFamily **out);

// # Safety
// `f` must be NULL or a family handle not yet freed.
void gt_family_free(struct GtFamily *f);

// Dimension of the parameter space (0 for NULL).
//
// # Safety
// `f` must be NULL or a live family handle.
size_t gt_family_param_dim(const struct GtFamily *f);

// Field from values in row-major order (last axis fastest).
//
// # Safety
// `axes` must hold `ndim` entries and `values` `len` values.
enum GtStatus gt_field_new(const struct GtAxis *axes,
                           size_t ndim,
                           const double *values,
                           size_t len,
                           struct GtField **out);

// # Safety
// `f` must be NULL or a field handle not yet freed.
void gt_field_free(struct GtField *f);

// # Safety
// `f` must be NULL or a live field handle.
size_t gt_field_ndim(const struct GtField *f);

// # Safety
// `f` must be NULL or a live field handle.
size_t gt_field_len(const struct GtField *f);

// # Safety
// `f` must be a live field handle and `out` writable.
enum GtStatus gt_field_axis(const struct GtField *f, size_t i, struct GtAxis *out);

// Copies the values into `buf`, which must hold at least `gt_field_len` values.
//
// # Safety
// `buf` must be writable for `len` values.
enum GtStatus gt_field_values(const struct GtField *f, double *buf, size_t len);

// # Safety
// `path` must be NUL-terminated.
enum GtStatus gt_field_save(const struct GtField *f, const char *path);

// # Safety
// `path` must be NUL-terminated.
enum GtStatus gt_field_load(const char *path, struct GtField **out);

// Tomograms of a sampled density over a parameter grid. `summary` may be NULL.
//
// # Safety
// `param_axes` must hold `param_ndim` entries and `x_axis` one.
enum GtStatus gt_forward(const struct GtField *field,
                         const struct GtFamily *family,
                         const struct GtAxis *param_axes,
                         size_t param_ndim,
                         const struct GtAxis *x_axis,
                         struct GtTomogram **out,
                         struct GtForwardSummary *summary);

// # Safety
// `t` must be NULL or a tomogram handle not yet freed.
void gt_tomogram_free(struct GtTomogram *t);

// Number of parameter points (0 for NULL).
//
// # Safety
// `t` must be NULL or a live tomogram handle.
size_t gt_tomogram_n_params(const struct GtTomogram *t);

// Number of X points per parameter point (0 for NULL).
//
// # Safety
// `t` must be NULL or a live tomogram handle.
size_t gt_tomogram_n_x(const struct GtTomogram *t);

// # Safety
// `t` must be NULL or a live tomogram handle.
size_t gt_tomogram_param_ndim(const struct GtTomogram *t);

// Axis `i` of the parameter grid.
//
// # Safety
// `t` must be a live tomogram handle and `out` writable.
enum GtStatus gt_tomogram_param_axis(const struct GtTomogram *t, size_t i, struct GtAxis *out);

// # Safety
// `t` must be a live tomogram handle and `out` writable.
enum GtStatus gt_tomogram_x_axis(const struct GtTomogram *t, struct GtAxis *out);

// Copies ω into `buf`, one row of `n_x` values per parameter point.
//
// # Safety
// `buf` must be writable for `len` values.
enum GtStatus gt_tomogram_values(const struct GtTomogram *t, double *buf, size_t len);

// # Safety
// `path` must be NUL-terminated.
enum GtStatus gt_tomogram_save(const struct GtTomogram *t, const char *path);

// # Safety
// `path` must be NUL-terminated.
enum GtStatus gt_tomogram_load(const char *path, struct GtTomogram **out);

// Reconstructs the density on an output grid. `diagnostics` may be NULL.
// A non-positive `decay_floor` selects the default.
//
// # Safety
// `out_axes` must hold `ndim` entries.
enum GtStatus gt_invert(const struct GtTomogram *tomogram,
                        const struct GtFamily *family,
                        const struct GtAxis *out_axes,
                        size_t ndim,
                        double decay_floor,
                        int32_t taper,
                        struct GtField **out,
                        struct GtInverseDiagnostics *diagnostics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENTOMO_H */

#ifndef CDSURF_H
#define CDSURF_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum {
  CDS_STATUS_OK = 0,
  CDS_STATUS_NULL_POINTER = 1,
  CDS_STATUS_INVALID_ARGUMENT = 2,
  CDS_STATUS_OUT_OF_DOMAIN = 3,
  CDS_STATUS_NO_CONVERGENCE = 4,
  CDS_STATUS_NUMERICAL = 5,
  CDS_STATUS_UNKNOWN_EXPERIMENT = 6,
  CDS_STATUS_IO = 7,
  CDS_STATUS_PANIC = 8,
} CdsStatus;

/*
 Opaque sampled-curve handle.
 */
typedef struct CdsCurve CdsCurve;

/*
 Opaque experiment-report handle.
 */
typedef struct CdsReport CdsReport;

/*
 Opaque surface handle.
 */
typedef struct CdsSurface CdsSurface;

typedef struct {
  double u1;
  double u2;
  double x[3];
  double distance;
  double residual;
  /*
   Number of other nearest points tying with this one.
   */
  size_t ties;
} CdsFootPoint;

typedef struct {
  double t;
  double u1;
  double u2;
  double x[3];
} CdsCurveNode;

typedef struct {
  double measured;
  double target;
  double tolerance;
  bool pass;
} CdsReportRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` (NUL
 terminated, truncated to `len`). Returns the full message length without
 the terminator, or 0 when there is no message.

 # Safety
 `buf` is null or valid for writes of `len` bytes.
 */
size_t cds_last_error(char *buf, size_t len);

/*
 Graph `(x1, x2, -(a1 x1^2 + a2 x2^2) / 2)` over `[-1, 1]^2`.

 # Safety
 `out` is valid for writes.
 */
CdsStatus cds_surface_graph(double a1, double a2, CdsSurface **out);

/*
 Sphere of the given radius in polar coordinates `(theta, phi)`.

 # Safety
 `out` is valid for writes.
 */
CdsStatus cds_surface_sphere(double radius, CdsSurface **out);

/*
 Round cylinder about the `x3` axis in coordinates `(phi, z)`.

 # Safety
 `out` is valid for writes.
 */
CdsStatus cds_surface_round_cylinder(double radius, CdsSurface **out);

/*
 Half-infinite cylinder closed by a hemispherical cap, coordinates `(phi, w)`.

 # Safety
 `out` is valid for writes.
 */
CdsStatus cds_surface_capped_cylinder(double radius, CdsSurface **out);

/*
 Surface at distance `r >= 0` along the outward normal of `base`. The new
 handle shares `base`'s geometry; both must be freed.

 # Safety
 `base` is a live surface handle; `out` is valid for writes.
 */
CdsStatus cds_surface_offset(const CdsSurface *base, double r, CdsSurface **out);

/*
 # Safety
 `s` is null or a handle not yet freed.
 */
void cds_surface_free(CdsSurface *s);

/*
 # Safety
 `s` is a live handle; `out` is valid for writes of 3 doubles.
 */
CdsStatus cds_surface_eval(const CdsSurface *s, double u1, double u2, double *out);

/*
 Principal curvatures `k1 >= k2` with respect to the outward normal.

 # Safety
 `s` is a live handle; `k1` and `k2` are valid for writes.
 */
CdsStatus cds_principal_curvatures(const CdsSurface *s,
                                   double u1,
                                   double u2,
                                   double *k1,
                                   double *k2);

/*
 Principal curvature `a / (1 + r a)` of the surface at distance `r`.
 */
double cds_offset_curvature_law(double a, double r);

/*
 Nearest point of `s` to `x`.

 # Safety
 `s` is a live handle; `x` is valid for reads of 3 doubles; `out` for writes.
 */
CdsStatus cds_foot_point(const CdsSurface *s, const double *x, double tol, CdsFootPoint *out);

/*
 Geodesic from `(u1, u2)` with parameter velocity `(v1, v2)` on `[0, t_end]`.
 The curve may stop early at the domain boundary.

 # Safety
 `s` is a live handle; `out` is valid for writes.
 */
CdsStatus cds_geodesic(const CdsSurface *s,
                       double u1,
                       double u2,
                       double v1,
                       double v2,
                       double t_end,
                       double tol,
                       CdsCurve **out);

/*
 Number of nodes in the curve; 0 for a null handle.

 # Safety
 `c` is null or a live handle.
 */
size_t cds_curve_len(const CdsCurve *c);

/*
 Whether the curve stopped at the domain boundary.

 # Safety
 `c` is null or a live handle.
 */
bool cds_curve_truncated(const CdsCurve *c);

/*
 # Safety
 `c` is a live handle; `out` is valid for writes.
 */
CdsStatus cds_curve_node(const CdsCurve *c, size_t index, CdsCurveNode *out);

/*
 Largest geodesic curvature of the curve, measured on `s`.

 # Safety
 `s` and `c` are live handles; `out` is valid for writes.
 */
CdsStatus cds_curve_max_geodesic_curvature(const CdsSurface *s, const CdsCurve *c, double *out);

/*
 # Safety
 `c` is null or a handle not yet freed.
 */
void cds_curve_free(CdsCurve *c);

/*
 Runs a named experiment. `r` is ignored when NaN.

 # Safety
 `name` is a NUL-terminated string; `out` is valid for writes.
 */
CdsStatus cds_experiment_run(const char *name, uint64_t seed, double r, CdsReport **out);

/*
 # Safety
 `rep` is null or a live handle.
 */
size_t cds_report_row_count(const CdsReport *rep);

/*
 # Safety
 `rep` is null or a live handle.
 */
bool cds_report_all_pass(const CdsReport *rep);

/*
 # Safety
 `rep` is a live handle; `out` is valid for writes.
 */
CdsStatus cds_report_row(const CdsReport *rep, size_t index, CdsReportRow *out);

/*
 Label of row `index`, owned by the report; null when out of range.

 # Safety
 `rep` is null or a live handle. The pointer is valid until the report is freed.
 */
const char *cds_report_row_label(const CdsReport *rep, size_t index);

/*
 Writes the report as CSV.

 # Safety
 `rep` is a live handle; `path` is a NUL-terminated string.
 */
CdsStatus cds_report_write_csv(const CdsReport *rep, const char *path);

/*
 # Safety
 `rep` is null or a handle not yet freed.
 */
void cds_report_free(CdsReport *rep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDSURF_H */

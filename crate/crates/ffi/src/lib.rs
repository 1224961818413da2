//! C ABI over `cdsurf`.
//!
//! Objects are opaque heap handles created by `cds_*_new`-style constructors
//! and released with the matching `*_free`. Every fallible call returns a
//! [`CdsStatus`]; on failure [`cds_last_error`] yields a message for the
//! calling thread. Panics are caught at the boundary and reported as
//! [`CdsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use cdsurf::cli::emit_csv;
use cdsurf::experiments::{run_experiment, ExperimentError, ExperimentParams, ExperimentReport};
use cdsurf::geodesics::{integrate_geodesic, max_geodesic_curvature, GeodesicError, GeodesicState, SampledCurve};
use cdsurf::projection::{foot_point, offset_curvature_law, ProjectionError};
use cdsurf::surface::{
    offset_surface, principal_curvatures, CappedCylinderPatch, GraphPatch, ParamPoint, RoundCylinderPatch,
    SpherePatch, SurfaceError, SurfacePatch,
};
use nalgebra::{Vector2, Vector3};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    NoConvergence = 4,
    Numerical = 5,
    UnknownExperiment = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque surface handle.
pub struct CdsSurface {
    patch: Arc<dyn SurfacePatch>,
}

/// Opaque sampled-curve handle.
pub struct CdsCurve {
    curve: SampledCurve,
}

/// Opaque experiment-report handle.
pub struct CdsReport {
    report: ExperimentReport,
    labels: Vec<CString>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdsFootPoint {
    pub u1: f64,
    pub u2: f64,
    pub x: [f64; 3],
    pub distance: f64,
    pub residual: f64,
    /// Number of other nearest points tying with this one.
    pub ties: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdsCurveNode {
    pub t: f64,
    pub u1: f64,
    pub u2: f64,
    pub x: [f64; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdsReportRow {
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(CdsStatus, String);

impl From<SurfaceError> for Failure {
    fn from(e: SurfaceError) -> Self {
        let status = match e {
            SurfaceError::OutOfDomain { .. } => CdsStatus::OutOfDomain,
            SurfaceError::InvalidParameter(_) => CdsStatus::InvalidArgument,
            _ => CdsStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

impl From<ProjectionError> for Failure {
    fn from(e: ProjectionError) -> Self {
        match e {
            ProjectionError::Surface(s) => s.into(),
            ProjectionError::NoConvergence { .. } => Failure(CdsStatus::NoConvergence, e.to_string()),
            _ => Failure(CdsStatus::InvalidArgument, e.to_string()),
        }
    }
}

impl From<GeodesicError> for Failure {
    fn from(e: GeodesicError) -> Self {
        match e {
            GeodesicError::Surface(s) => s.into(),
            GeodesicError::BadTolerance(_) | GeodesicError::BadDuration(_) | GeodesicError::ZeroSpeed(_) => {
                Failure(CdsStatus::InvalidArgument, e.to_string())
            }
            _ => Failure(CdsStatus::Numerical, e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let status = match e {
            ExperimentError::Unknown(_) => CdsStatus::UnknownExperiment,
            ExperimentError::InvalidParameter(_) => CdsStatus::InvalidArgument,
            ExperimentError::Projection(ProjectionError::NoConvergence { .. }) => CdsStatus::NoConvergence,
            _ => CdsStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CdsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside cdsurf");
            CdsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CdsStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` is null or valid for reads of `T`.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or valid for writes of `T`.
unsafe fn put<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn new_surface(patch: Arc<dyn SurfacePatch>) -> *mut CdsSurface {
    Box::into_raw(Box::new(CdsSurface { patch }))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length without
/// the terminator, or 0 when there is no message.
///
/// # Safety
/// `buf` is null or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cds_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Graph `(x1, x2, -(a1 x1^2 + a2 x2^2) / 2)` over `[-1, 1]^2`.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_graph(a1: f64, a2: f64, out: *mut *mut CdsSurface) -> CdsStatus {
    guard(|| put(out, new_surface(Arc::new(GraphPatch::quadric(a1, a2)?)), "out"))
}

/// Sphere of the given radius in polar coordinates `(theta, phi)`.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_sphere(radius: f64, out: *mut *mut CdsSurface) -> CdsStatus {
    guard(|| put(out, new_surface(Arc::new(SpherePatch::new(radius)?)), "out"))
}

/// Round cylinder about the `x3` axis in coordinates `(phi, z)`.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_round_cylinder(radius: f64, out: *mut *mut CdsSurface) -> CdsStatus {
    guard(|| put(out, new_surface(Arc::new(RoundCylinderPatch::new(radius)?)), "out"))
}

/// Half-infinite cylinder closed by a hemispherical cap, coordinates `(phi, w)`.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_capped_cylinder(radius: f64, out: *mut *mut CdsSurface) -> CdsStatus {
    guard(|| put(out, new_surface(Arc::new(CappedCylinderPatch::new(radius)?)), "out"))
}

/// Surface at distance `r >= 0` along the outward normal of `base`. The new
/// handle shares `base`'s geometry; both must be freed.
///
/// # Safety
/// `base` is a live surface handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_offset(base: *const CdsSurface, r: f64, out: *mut *mut CdsSurface) -> CdsStatus {
    guard(|| {
        let base = get(base, "base")?;
        let off = offset_surface(base.patch.clone(), r)?;
        put(out, new_surface(Arc::new(off)), "out")
    })
}

/// # Safety
/// `s` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_free(s: *mut CdsSurface) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` is a live handle; `out` is valid for writes of 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn cds_surface_eval(s: *const CdsSurface, u1: f64, u2: f64, out: *mut f64) -> CdsStatus {
    guard(|| {
        let s = get(s, "surface")?;
        let x = s.patch.eval(ParamPoint::new(u1, u2))?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out, 3);
        Ok(())
    })
}

/// Principal curvatures `k1 >= k2` with respect to the outward normal.
///
/// # Safety
/// `s` is a live handle; `k1` and `k2` are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_principal_curvatures(
    s: *const CdsSurface,
    u1: f64,
    u2: f64,
    k1: *mut f64,
    k2: *mut f64,
) -> CdsStatus {
    guard(|| {
        let pc = principal_curvatures(&get(s, "surface")?.patch, ParamPoint::new(u1, u2))?;
        put(k1, pc.k1, "k1")?;
        put(k2, pc.k2, "k2")
    })
}

/// Principal curvature `a / (1 + r a)` of the surface at distance `r`.
#[no_mangle]
pub extern "C" fn cds_offset_curvature_law(a: f64, r: f64) -> f64 {
    offset_curvature_law(a, r)
}

/// Nearest point of `s` to `x`.
///
/// # Safety
/// `s` is a live handle; `x` is valid for reads of 3 doubles; `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_foot_point(
    s: *const CdsSurface,
    x: *const f64,
    tol: f64,
    out: *mut CdsFootPoint,
) -> CdsStatus {
    guard(|| {
        let s = get(s, "surface")?;
        if x.is_null() {
            return Err(null("x"));
        }
        let q = Vector3::from_column_slice(std::slice::from_raw_parts(x, 3));
        let p = foot_point(&s.patch, q, tol)?;
        let fp = CdsFootPoint {
            u1: p.foot_u.u1,
            u2: p.foot_u.u2,
            x: [p.foot_x.x, p.foot_x.y, p.foot_x.z],
            distance: p.distance,
            residual: p.residual,
            ties: p.ties.len(),
        };
        put(out, fp, "out")
    })
}

/// Geodesic from `(u1, u2)` with parameter velocity `(v1, v2)` on `[0, t_end]`.
/// The curve may stop early at the domain boundary.
///
/// # Safety
/// `s` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_geodesic(
    s: *const CdsSurface,
    u1: f64,
    u2: f64,
    v1: f64,
    v2: f64,
    t_end: f64,
    tol: f64,
    out: *mut *mut CdsCurve,
) -> CdsStatus {
    guard(|| {
        let s = get(s, "surface")?;
        let state = GeodesicState::new(ParamPoint::new(u1, u2), Vector2::new(v1, v2));
        let curve = integrate_geodesic(&s.patch, state, t_end, tol)?;
        put(out, Box::into_raw(Box::new(CdsCurve { curve })), "out")
    })
}

/// Number of nodes in the curve; 0 for a null handle.
///
/// # Safety
/// `c` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cds_curve_len(c: *const CdsCurve) -> usize {
    c.as_ref().map_or(0, |c| c.curve.len())
}

/// Whether the curve stopped at the domain boundary.
///
/// # Safety
/// `c` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cds_curve_truncated(c: *const CdsCurve) -> bool {
    c.as_ref().is_some_and(|c| c.curve.truncation.is_some())
}

/// # Safety
/// `c` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_curve_node(c: *const CdsCurve, index: usize, out: *mut CdsCurveNode) -> CdsStatus {
    guard(|| {
        let c = get(c, "curve")?;
        let n = c
            .curve
            .nodes
            .get(index)
            .ok_or_else(|| Failure(CdsStatus::InvalidArgument, format!("node {index} out of range")))?;
        put(out, CdsCurveNode { t: n.t, u1: n.u.u1, u2: n.u.u2, x: [n.x.x, n.x.y, n.x.z] }, "out")
    })
}

/// Largest geodesic curvature of the curve, measured on `s`.
///
/// # Safety
/// `s` and `c` are live handles; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_curve_max_geodesic_curvature(
    s: *const CdsSurface,
    c: *const CdsCurve,
    out: *mut f64,
) -> CdsStatus {
    guard(|| {
        let k = max_geodesic_curvature(&get(s, "surface")?.patch, &get(c, "curve")?.curve)?;
        put(out, k, "out")
    })
}

/// # Safety
/// `c` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cds_curve_free(c: *mut CdsCurve) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs a named experiment. `r` is ignored when NaN.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_experiment_run(
    name: *const c_char,
    seed: u64,
    r: f64,
    out: *mut *mut CdsReport,
) -> CdsStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Failure(CdsStatus::InvalidArgument, "name is not UTF-8".into()))?;
        let params = ExperimentParams { seed, r: if r.is_nan() { None } else { Some(r) }, plot: false };
        let report = run_experiment(name, &params)?;
        let labels = report.rows.iter().map(|row| CString::new(row.label.replace('\0', " ")).unwrap_or_default()).collect();
        put(out, Box::into_raw(Box::new(CdsReport { report, labels })), "out")
    })
}

/// # Safety
/// `rep` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cds_report_row_count(rep: *const CdsReport) -> usize {
    rep.as_ref().map_or(0, |r| r.report.rows.len())
}

/// # Safety
/// `rep` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cds_report_all_pass(rep: *const CdsReport) -> bool {
    rep.as_ref().is_some_and(|r| r.report.all_pass())
}

/// # Safety
/// `rep` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cds_report_row(rep: *const CdsReport, index: usize, out: *mut CdsReportRow) -> CdsStatus {
    guard(|| {
        let rep = get(rep, "report")?;
        let row = rep
            .report
            .rows
            .get(index)
            .ok_or_else(|| Failure(CdsStatus::InvalidArgument, format!("row {index} out of range")))?;
        put(out, CdsReportRow { measured: row.measured, target: row.target, tolerance: row.tolerance, pass: row.pass }, "out")
    })
}

/// Label of row `index`, owned by the report; null when out of range.
///
/// # Safety
/// `rep` is null or a live handle. The pointer is valid until the report is freed.
#[no_mangle]
pub unsafe extern "C" fn cds_report_row_label(rep: *const CdsReport, index: usize) -> *const c_char {
    rep.as_ref().and_then(|r| r.labels.get(index)).map_or(ptr::null(), |l| l.as_ptr())
}

/// Writes the report as CSV.
///
/// # Safety
/// `rep` is a live handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cds_report_write_csv(rep: *const CdsReport, path: *const c_char) -> CdsStatus {
    guard(|| {
        let rep = get(rep, "report")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(CdsStatus::InvalidArgument, "path is not UTF-8".into()))?;
        emit_csv(&rep.report, Path::new(path)).map_err(|e| Failure(CdsStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `rep` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cds_report_free(rep: *mut CdsReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

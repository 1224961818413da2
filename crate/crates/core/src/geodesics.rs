//! Geodesic flow on parametric patches, geodesic curvature of sampled curves
//! and the small-`x2` limit of the geodesic acceleration ratio on graph patches.

use std::sync::Arc;

use nalgebra::Vector2;
use thiserror::Error;

use crate::numerics::{fd_weights, richardson, NumericsError};
use crate::ode::{Dopri5, OdeError};
use crate::surface::{
    fundamental_forms, AmbientPoint, GraphPatch, HeightRemainder, ParamPoint, SurfaceError, SurfacePatch,
};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest spacing between output nodes of [`integrate_geodesic`].
pub const OUTPUT_SPACING: f64 = 1.0 / 256.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("integration time must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("step size underflow at t = {t}; the geodesic flow is too stiff here")]
    Stiff { t: f64 },
    #[error("geodesic curvature needs 5 nodes bracketing t = {t}; curve has {nodes} nodes on [{t0}, {t1}]")]
    Sampling { t: f64, nodes: usize, t0: f64, t1: f64 },
    #[error("curve has zero speed at t = {0}")]
    ZeroSpeed(f64),
    #[error(transparent)]
    Extrapolation(#[from] NumericsError),
}

/// Position and parameter-space velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub u: ParamPoint,
    pub v: Vector2<f64>,
}

impl GeodesicState {
    pub fn new(u: ParamPoint, v: Vector2<f64>) -> Self {
        Self { u, v }
    }

    fn to_array(self) -> [f64; 4] {
        [self.u.u1, self.u.u2, self.v.x, self.v.y]
    }

    fn from_array(y: [f64; 4]) -> Self {
        Self { u: ParamPoint::new(y[0], y[1]), v: Vector2::new(y[2], y[3]) }
    }
}

/// One sample of a curve on a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveNode {
    pub t: f64,
    pub u: ParamPoint,
    pub x: AmbientPoint,
}

/// Why a curve stops before its requested end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// The trajectory reached the boundary of the patch domain.
    DomainExit { t: f64 },
}

/// Time-stamped polyline in parameter and ambient space.
///
/// Parameter coordinates are kept continuous; periodic coordinates are not
/// wrapped into their base interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledCurve {
    pub nodes: Vec<CurveNode>,
    /// Parameter velocities at the nodes, when known exactly.
    pub velocities: Option<Vec<Vector2<f64>>>,
    pub truncation: Option<Truncation>,
    /// Times of nodes whose foot point was not unique.
    pub multi_valued: Vec<f64>,
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|n| n.t)
    }

    pub fn first_time(&self) -> Option<f64> {
        self.nodes.first().map(|n| n.t)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.nodes.last().map(|n| n.t)
    }

    /// Final position and velocity, when velocities were recorded.
    pub fn end_state(&self) -> Option<GeodesicState> {
        let v = self.velocities.as_ref()?.last()?;
        Some(GeodesicState::new(self.nodes.last()?.u, *v))
    }

    /// Builds a curve on `patch` from a parameter-space map `t -> u(t)`.
    pub fn from_param_fn(
        patch: &dyn SurfacePatch,
        times: &[f64],
        f: impl Fn(f64) -> ParamPoint,
    ) -> Result<Self, SurfaceError> {
        let nodes = times
            .iter()
            .map(|&t| {
                let u = f(t);
                Ok(CurveNode { t, u, x: patch.eval(u)? })
            })
            .collect::<Result<Vec<_>, SurfaceError>>()?;
        Ok(Self { nodes, velocities: None, truncation: None, multi_valued: Vec::new() })
    }
}

/// Right-hand side `(v, a)` of the geodesic equations,
/// `a_k = -Gamma^k_ij v_i v_j`.
pub fn geodesic_rhs(patch: &dyn SurfacePatch, s: GeodesicState) -> Result<[f64; 4], SurfaceError> {
    let gamma = patch.christoffel(s.u)?;
    let a = gamma.contract(s.v);
    Ok([s.v.x, s.v.y, a.x, a.y])
}

/// Squared induced-metric speed `v^T g v`.
pub fn metric_speed_squared(patch: &dyn SurfacePatch, s: GeodesicState) -> Result<f64, SurfaceError> {
    let g = fundamental_forms(patch, s.u)?.metric();
    Ok(s.v.dot(&(g * s.v)))
}

fn check_tol(tol: f64) -> Result<(), GeodesicError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(GeodesicError::BadTolerance(tol))
    }
}

/// Integrates forward from `s0` through the increasing, non-negative
/// `times` (first entry may be 0). Stops early at a domain exit.
fn integrate_forward(
    patch: &dyn SurfacePatch,
    s0: GeodesicState,
    times: &[f64],
    tol: f64,
    flip: bool,
) -> Result<(Vec<(f64, GeodesicState)>, Option<f64>), GeodesicError> {
    let rhs = |_t: f64, y: &[f64; 4]| geodesic_rhs(patch, GeodesicState::from_array(*y));
    let mut ode = Dopri5::new(rhs, 0.0, s0.to_array(), tol).map_err(|_| GeodesicError::BadTolerance(tol))?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        match ode.advance_to(t) {
            Ok(y) => {
                let mut s = GeodesicState::from_array(y);
                if flip {
                    s.v = -s.v;
                }
                out.push((t, s));
            }
            Err(OdeError::Rhs { source: SurfaceError::OutOfDomain { .. }, .. }) => {
                return Ok((out, Some(ode.time())));
            }
            Err(OdeError::Rhs { source, .. }) => return Err(source.into()),
            Err(OdeError::StepUnderflow { t, .. }) => return Err(GeodesicError::Stiff { t }),
            Err(OdeError::BadTolerance(t)) => return Err(GeodesicError::BadTolerance(t)),
        }
    }
    Ok((out, None))
}

fn assemble(
    patch: &dyn SurfacePatch,
    states: Vec<(f64, GeodesicState)>,
    truncation: Option<Truncation>,
) -> Result<SampledCurve, GeodesicError> {
    let mut nodes = Vec::with_capacity(states.len());
    let mut velocities = Vec::with_capacity(states.len());
    for (t, s) in states {
        nodes.push(CurveNode { t, u: s.u, x: patch.eval(s.u)? });
        velocities.push(s.v);
    }
    Ok(SampledCurve { nodes, velocities: Some(velocities), truncation, multi_valued: Vec::new() })
}

/// Geodesic from `s0` on `[0, t_end]` with adaptive Dormand-Prince steps,
/// sampled on a uniform grid of spacing at most [`OUTPUT_SPACING`].
pub fn integrate_geodesic(
    patch: &dyn SurfacePatch,
    s0: GeodesicState,
    t_end: f64,
    tol: f64,
) -> Result<SampledCurve, GeodesicError> {
    check_tol(tol)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(GeodesicError::BadDuration(t_end));
    }
    let n = (t_end / OUTPUT_SPACING).ceil().max(4.0) as usize;
    let times: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
    geodesic_at_times(patch, s0, &times, tol)
}

/// Geodesic through `s0` at `t = 0`, sampled at the given strictly increasing
/// times, which may be negative.
pub fn geodesic_at_times(
    patch: &dyn SurfacePatch,
    s0: GeodesicState,
    times: &[f64],
    tol: f64,
) -> Result<SampledCurve, GeodesicError> {
    check_tol(tol)?;
    patch.jet(s0.u, 0)?;
    let split = times.partition_point(|t| *t < 0.0);
    let back_times: Vec<f64> = times[..split].iter().rev().map(|t| -t).collect();
    let (mut back, back_exit) =
        integrate_forward(patch, GeodesicState::new(s0.u, -s0.v), &back_times, tol, true)?;
    let (fwd, fwd_exit) = integrate_forward(patch, s0, &times[split..], tol, false)?;
    back.reverse();
    let mut states: Vec<(f64, GeodesicState)> = back.into_iter().map(|(t, s)| (-t, s)).collect();
    states.extend(fwd);
    let truncation = fwd_exit.or(back_exit.map(|t| -t)).map(|t| Truncation::DomainExit { t });
    assemble(patch, states, truncation)
}

/// Index of the first of the `width` consecutive nodes best centred on `t`.
fn stencil_start(times: &[f64], t: f64, width: usize) -> usize {
    let nearest = match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => i,
        Err(i) => {
            if i == 0 {
                0
            } else if i >= times.len() || (t - times[i - 1]) <= (times[i] - t) {
                (i - 1).min(times.len() - 1)
            } else {
                i
            }
        }
    };
    nearest.saturating_sub(width / 2).min(times.len() - width)
}

/// Position, first and second parameter-space derivatives of a sampled
/// curve at `t`, from finite-difference weights on the 7 nearest nodes
/// (5 on shorter curves).
pub fn curve_derivatives(curve: &SampledCurve, t: f64) -> Result<[Vector2<f64>; 3], GeodesicError> {
    let times: Vec<f64> = curve.times().collect();
    let sampling = || GeodesicError::Sampling {
        t,
        nodes: times.len(),
        t0: times.first().copied().unwrap_or(f64::NAN),
        t1: times.last().copied().unwrap_or(f64::NAN),
    };
    if times.len() < 5 || !(t >= times[0] && t <= times[times.len() - 1]) {
        return Err(sampling());
    }
    let width = if times.len() >= 7 { 7 } else { 5 };
    let start = stencil_start(&times, t, width);
    let w = fd_weights(t, &times[start..start + width], 2);
    let mut out = [Vector2::zeros(); 3];
    for (order, d) in out.iter_mut().enumerate() {
        for j in 0..width {
            *d += curve.nodes[start + j].u.to_vector() * w[order][j];
        }
    }
    Ok(out)
}

/// Geodesic curvature at `t`: the induced-metric norm of the covariant
/// acceleration's component orthogonal to the velocity, over speed squared.
pub fn geodesic_curvature(patch: &dyn SurfacePatch, curve: &SampledCurve, t: f64) -> Result<f64, GeodesicError> {
    let [u, v, acc] = curve_derivatives(curve, t)?;
    let u = ParamPoint::from(u);
    let g = fundamental_forms(patch, u)?.metric();
    let gamma = patch.christoffel(u)?;
    let cov = acc - gamma.contract(v);
    let speed2 = v.dot(&(g * v));
    if !(speed2 > 0.0) {
        return Err(GeodesicError::ZeroSpeed(t));
    }
    let perp = cov - v * (cov.dot(&(g * v)) / speed2);
    Ok(perp.dot(&(g * perp)).max(0.0).sqrt() / speed2)
}

/// Largest geodesic curvature over the curve's nodes.
pub fn max_geodesic_curvature(patch: &dyn SurfacePatch, curve: &SampledCurve) -> Result<f64, GeodesicError> {
    curve
        .times()
        .map(|t| geodesic_curvature(patch, curve, t))
        .try_fold(0.0_f64, |m, k| Ok(m.max(k?)))
}

/// Ratio samples and their extrapolation to scale zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    /// `(scale, ratio)` pairs, scales decreasing.
    pub values: Vec<(f64, f64)>,
    pub extrapolated: f64,
    /// Observed convergence order; infinite when the ratios are constant.
    pub fit_order: f64,
}

/// `x2''(0) / (x1'(0)^2 x2(0))` for the geodesic through `(0, x2)` with
/// velocity `(1, 0)`, read off the geodesic equations.
pub fn acceleration_ratio(patch: &GraphPatch, x2: f64) -> Result<f64, SurfaceError> {
    let s = GeodesicState::new(ParamPoint::new(0.0, x2), Vector2::new(1.0, 0.0));
    let d = geodesic_rhs(patch, s)?;
    Ok(d[3] / (s.v.x * s.v.x * x2))
}

/// Extrapolates the geodesic acceleration ratio on the graph
/// `(a1, a2, h)` to `x2 -> 0`, assuming a quadratic leading error.
pub fn lemma31_limit(
    a1: f64,
    a2: f64,
    h: Arc<dyn HeightRemainder>,
    x2_scales: &[f64],
) -> Result<LimitEstimate, GeodesicError> {
    let patch = GraphPatch::new(a1, a2, h)?;
    let values = x2_scales
        .iter()
        .map(|&s| Ok((s, acceleration_ratio(&patch, s)?)))
        .collect::<Result<Vec<_>, SurfaceError>>()?;
    let ratios: Vec<f64> = values.iter().map(|v| v.1).collect();
    let e = richardson(x2_scales, &ratios, 2.0)?;
    Ok(LimitEstimate { values, extrapolated: e.value, fit_order: e.order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{PolynomialRemainder, SpherePatch, ZeroRemainder};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn rhs_examples() {
        let plane = GraphPatch::quadric(0.0, 0.0).unwrap();
        let s = GeodesicState::new(ParamPoint::new(0.2, 0.3), Vector2::new(1.0, 0.5));
        let d = geodesic_rhs(&plane, s).unwrap();
        assert_eq!((d[2], d[3]), (0.0, 0.0));
        let p = GraphPatch::quadric(1.0, 2.0).unwrap();
        let d = geodesic_rhs(&p, GeodesicState::new(ParamPoint::new(0.0, 0.1), Vector2::new(1.0, 0.0))).unwrap();
        assert_relative_eq!(d[3], -0.2 / 1.04, epsilon = 1e-15);
        let d = geodesic_rhs(&p, GeodesicState::new(ParamPoint::ORIGIN, Vector2::new(1.0, 0.0))).unwrap();
        assert_eq!((d[2], d[3]), (0.0, 0.0));
    }

    #[test]
    fn straight_segment_on_plane() {
        let plane = GraphPatch::quadric(0.0, 0.0).unwrap();
        let c = integrate_geodesic(&plane, GeodesicState::new(ParamPoint::ORIGIN, Vector2::new(1.0, 0.0)), 1.0, 1e-10)
            .unwrap();
        let end = c.nodes.last().unwrap();
        assert_eq!(end.t, 1.0);
        assert!((end.u.u1 - 1.0).abs() < 1e-14 && end.u.u2.abs() < 1e-14);
        assert!(c.truncation.is_none());
    }

    #[test]
    fn quarter_great_circle_on_unit_sphere() {
        let s = SpherePatch::new(1.0).unwrap();
        let s0 = GeodesicState::new(ParamPoint::new(FRAC_PI_2, 0.0), Vector2::new(0.0, 1.0));
        let c = integrate_geodesic(&s, s0, FRAC_PI_2, 1e-10).unwrap();
        let end = c.nodes.last().unwrap();
        assert!((end.u.u2 - FRAC_PI_2).abs() < 1e-8);
        assert!((end.x - nalgebra::Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn domain_exit_truncates_and_flags() {
        let p = GraphPatch::quadric(1.0, 2.0).unwrap();
        let c = integrate_geodesic(&p, GeodesicState::new(ParamPoint::ORIGIN, Vector2::new(1.0, 0.0)), 3.0, 1e-10)
            .unwrap();
        match c.truncation {
            Some(Truncation::DomainExit { t }) => assert!(t > 0.5 && t < 1.5),
            other => panic!("expected domain exit, got {other:?}"),
        }
        assert!(c.last_time().unwrap() < 1.5);
    }

    #[test]
    fn latitude_circle_curvature_is_cot_colatitude() {
        let s = SpherePatch::new(1.0).unwrap();
        let times: Vec<f64> = (0..41).map(|i| i as f64 * 0.01).collect();
        let c = SampledCurve::from_param_fn(&s, &times, |t| ParamPoint::new(FRAC_PI_4, t)).unwrap();
        let k = geodesic_curvature(&s, &c, 0.2).unwrap();
        assert!((k - 1.0).abs() < 1e-4, "{k}");
        let k_end = geodesic_curvature(&s, &c, 0.4).unwrap();
        assert!((k_end - 1.0).abs() < 1e-4, "{k_end}");
    }

    #[test]
    fn sampling_errors() {
        let s = SpherePatch::new(1.0).unwrap();
        let c = SampledCurve::from_param_fn(&s, &[0.0, 0.1, 0.2], |t| ParamPoint::new(1.0, t)).unwrap();
        assert!(matches!(geodesic_curvature(&s, &c, 0.1), Err(GeodesicError::Sampling { .. })));
    }

    #[test]
    fn negative_times_run_backwards() {
        let s = SpherePatch::new(1.0).unwrap();
        let s0 = GeodesicState::new(ParamPoint::new(FRAC_PI_2, 1.0), Vector2::new(0.0, 1.0));
        let c = geodesic_at_times(&s, s0, &[-0.2, -0.1, 0.0, 0.1, 0.2], 1e-12).unwrap();
        for n in &c.nodes {
            assert!((n.u.u2 - (1.0 + n.t)).abs() < 1e-10);
        }
        let v = c.velocities.unwrap();
        assert!((v[0].y - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ratio_limit_examples() {
        let scales = [0.1, 0.05, 0.025];
        let e = lemma31_limit(1.0, 2.0, Arc::new(ZeroRemainder), &scales).unwrap();
        assert!((e.extrapolated + 2.0).abs() < 1e-3);
        assert!(e.fit_order >= 1.0);
        let c = lemma31_limit(0.0, 3.0, Arc::new(ZeroRemainder), &scales).unwrap();
        assert_eq!(c.extrapolated, 0.0);
        let q = lemma31_limit(1.0, 1.0, Arc::new(PolynomialRemainder::cross_quartic(0.25)), &scales).unwrap();
        assert!((q.extrapolated + 1.0).abs() < 1e-3);
    }
}

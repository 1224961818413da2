//! Property checks shared by the property suite and the acceptance harness.
//! Each returns the measured worst case next to the bound it must respect.
#![allow(dead_code)]

use std::sync::Arc;

use cdsurf::geodesics::{
    geodesic_curvature, integrate_geodesic, metric_speed_squared, GeodesicState, SampledCurve,
};
use cdsurf::projection::{foot_point, inverse_consistency};
use cdsurf::surface::{
    offset_surface, CappedCylinderPatch, Domain, GraphPatch, ParamPoint, RoundCylinderPatch, SpherePatch, SurfacePatch,
};
use nalgebra::{Vector2, Vector3};

pub const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct Check {
    pub measured: f64,
    pub bound: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.measured <= self.bound
    }
}

pub fn graph(a1: f64, a2: f64) -> GraphPatch {
    GraphPatch::quadric(a1, a2).unwrap()
}

/// Relative variation of the induced-metric speed along an integrated geodesic.
pub fn energy_drift(patch: &dyn SurfacePatch, s0: GeodesicState, t_end: f64) -> Check {
    let curve = integrate_geodesic(patch, s0, t_end, TOL).unwrap();
    let v0 = metric_speed_squared(patch, s0).unwrap().sqrt();
    let vel = curve.velocities.as_ref().unwrap();
    let worst = curve
        .nodes
        .iter()
        .zip(vel)
        .map(|(n, v)| (metric_speed_squared(patch, GeodesicState::new(n.u, *v)).unwrap().sqrt() - v0).abs() / v0)
        .fold(0.0, f64::max);
    let t = curve.last_time().unwrap();
    Check { measured: worst, bound: 10.0 * TOL * t.max(1.0) }
}

/// Distance in parameter space after integrating forward, negating the
/// velocity and integrating back for the same time. `None` when the
/// forward run leaves the patch.
pub fn time_reversal(patch: &dyn SurfacePatch, s0: GeodesicState, t_end: f64) -> Option<Check> {
    let fwd = integrate_geodesic(patch, s0, t_end, TOL).unwrap();
    if fwd.truncation.is_some() {
        return None;
    }
    let end = fwd.end_state().unwrap();
    let back = integrate_geodesic(patch, GeodesicState::new(end.u, -end.v), t_end, TOL).unwrap();
    if back.truncation.is_some() {
        return None;
    }
    let u = back.nodes.last().unwrap().u;
    let d = Vector2::new(u.u1 - s0.u.u1, u.u2 - s0.u.u2).norm();
    Some(Check { measured: d, bound: 100.0 * TOL })
}

/// Largest difference of geodesic curvature between `t -> c(t)` and
/// `s -> c(s^3)` at matched interior points.
pub fn reparam_invariance(patch: &dyn SurfacePatch, c: impl Fn(f64) -> ParamPoint + Copy) -> Check {
    let (t0, t1) = (0.5, 1.0);
    let n = 256;
    let times: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
    let (s0, s1) = (t0.cbrt(), t1.cbrt());
    let s_times: Vec<f64> = (0..=n).map(|i| s0 + (s1 - s0) * i as f64 / n as f64).collect();
    let original = SampledCurve::from_param_fn(patch, &times, c).unwrap();
    let reparam = SampledCurve::from_param_fn(patch, &s_times, |s| c(s * s * s)).unwrap();
    let mut worst = 0.0_f64;
    for &s in &s_times[8..n - 8] {
        let a = geodesic_curvature(patch, &original, s * s * s).unwrap();
        let b = geodesic_curvature(patch, &reparam, s).unwrap();
        worst = worst.max((a - b).abs());
    }
    Check { measured: worst, bound: 1e-6 }
}

/// Angle between `x - foot` and the unit normal at the foot.
pub fn foot_orthogonality(patch: &dyn SurfacePatch, x: Vector3<f64>) -> Check {
    let p = foot_point(patch, x, TOL).unwrap();
    let d = x - p.foot_x;
    let n = patch.normal(p.foot_u).unwrap();
    let angle = if d.norm() == 0.0 { 0.0 } else { (d.cross(&n).norm() / d.norm()).asin() };
    Check { measured: angle, bound: 1e-7 }
}

/// How far the closest point of a 200x200 grid beats the foot point; the
/// bound is the squared ambient grid spacing times a curvature bound.
pub fn foot_optimality(patch: &dyn SurfacePatch, x: Vector3<f64>, curvature_bound: f64) -> Check {
    let p = foot_point(patch, x, TOL).unwrap();
    let dom = patch.domain();
    let pts = dom.grid(200, 200);
    let mut best = f64::INFINITY;
    let mut spacing = 0.0_f64;
    for (k, u) in pts.iter().enumerate() {
        let s = patch.eval(*u).unwrap();
        best = best.min((x - s).norm());
        if k % 200 != 199 {
            spacing = spacing.max((patch.eval(pts[k + 1]).unwrap() - s).norm());
        }
        if k + 200 < pts.len() {
            spacing = spacing.max((patch.eval(pts[k + 200]).unwrap() - s).norm());
        }
    }
    Check { measured: (p.distance - best).max(0.0), bound: spacing * spacing * curvature_bound }
}

/// Round-trip deviations for the constant-distance pairs used in the suite:
/// spheres 1/2, cylinders 1/3, capped cylinders 1/2 and a graph with its
/// offset at distance 0.5.
pub fn inverse_pairs() -> Vec<(&'static str, Check)> {
    let sph = inverse_consistency(&SpherePatch::new(1.0).unwrap(), &SpherePatch::new(2.0).unwrap(), 64, TOL).unwrap();
    let cyl = inverse_consistency(
        &RoundCylinderPatch::with_height(1.0, -2.0, 2.0).unwrap(),
        &RoundCylinderPatch::with_height(3.0, -2.0, 2.0).unwrap(),
        64,
        TOL,
    )
    .unwrap();
    let capped = inverse_consistency(
        &CappedCylinderPatch::with_height(1.0, 2.0).unwrap(),
        &CappedCylinderPatch::with_height(2.0, 2.0).unwrap(),
        64,
        TOL,
    )
    .unwrap();
    let base: Arc<dyn SurfacePatch> = Arc::new(graph(1.0, 2.0).with_domain(Domain::rect(-0.5, 0.5, -0.5, 0.5)));
    let off = offset_surface(base.clone(), 0.5).unwrap();
    let g = inverse_consistency(base.as_ref(), &off, 64, TOL).unwrap();
    vec![
        ("spheres", Check { measured: sph.max_deviation, bound: 1e-8 }),
        ("cylinders", Check { measured: cyl.max_deviation, bound: 1e-8 }),
        ("capped", Check { measured: capped.max_deviation, bound: 1e-6 }),
        ("graph_offset", Check { measured: g.max_deviation, bound: 1e-6 }),
    ]
}

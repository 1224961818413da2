//! Nearest-point projection onto surface patches, constant-distance surfaces
//! and projected curves. The planar offset-curve operations used for the
//! cylinder foliation live in [`crate::planar`] and are re-exported here.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::geodesics::{CurveNode, SampledCurve};
use crate::surface::{AmbientPoint, Domain, ParamPoint, ProjectionChart, SurfaceError, SurfacePatch};

pub use crate::planar::{
    convexity_check, planar_curvature, planar_offset_curve, Convexity, OffsetCurve, OffsetRadius, PlanarCurve,
};
pub use crate::surface::{offset_surface, OffsetPatch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("query point is not finite")]
    BadQuery,
    #[error("foot-point iteration did not converge; best residual {}", best.residual)]
    NoConvergence { best: Box<ProjectionResult> },
}

/// Tuning of the foot-point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootPointOptions {
    /// Seeding grid is `grid x grid` per chart.
    pub grid: usize,
    pub max_iterations: usize,
    /// Newton runs started from the best grid minima.
    pub max_seeds: usize,
    /// Relative distance gap below which two minima count as a tie.
    pub tie_tolerance: f64,
}

impl Default for FootPointOptions {
    fn default() -> Self {
        Self { grid: 64, max_iterations: 50, max_seeds: 16, tie_tolerance: 1e-6 }
    }
}

/// A second minimizer at (numerically) the same distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alternative {
    pub foot_u: ParamPoint,
    pub foot_x: AmbientPoint,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub foot_u: ParamPoint,
    pub foot_x: AmbientPoint,
    pub distance: f64,
    pub iterations: usize,
    /// `max_i |(x - S) . d_i S| / (|x - S| |d_i S|)` at the foot.
    pub residual: f64,
    /// Other minimizers tying with the reported one; non-empty means the
    /// projection is not single-valued at this query.
    pub ties: Vec<Alternative>,
}

impl ProjectionResult {
    pub fn is_multi_valued(&self) -> bool {
        !self.ties.is_empty()
    }
}

fn residual(x: AmbientPoint, s: AmbientPoint, d1: &[nalgebra::Vector3<f64>; 2]) -> f64 {
    let diff = x - s;
    let dist = diff.norm();
    // At roundoff distance the direction x - S carries no information.
    if dist <= 1e-14 * (1.0 + x.norm()) {
        return 0.0;
    }
    d1.iter().map(|e| (diff.dot(e) / (dist * e.norm())).abs()).fold(0.0, f64::max)
}

struct Candidate {
    u: ParamPoint,
    x: AmbientPoint,
    distance: f64,
    iterations: usize,
    residual: f64,
    /// Descent direction when the stationary point is not a local minimum.
    escape: Option<Vector2<f64>>,
}

/// Hessian of `|x - S|^2 / 2` and the metric at a jet.
fn hessian_and_metric(x: AmbientPoint, jet: &crate::surface::Jet) -> (Matrix2<f64>, Matrix2<f64>) {
    let diff = x - jet.point;
    let mut hess = Matrix2::zeros();
    let mut metric = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            metric[(i, j)] = jet.d1[i].dot(&jet.d1[j]);
            hess[(i, j)] = metric[(i, j)] - diff.dot(&jet.d2[i][j]);
        }
    }
    (hess, metric)
}

/// Local minima of the grid distance, best first.
fn grid_seeds(chart: &dyn SurfacePatch, valid: &Domain, x: AmbientPoint, opts: &FootPointOptions) -> Vec<ParamPoint> {
    let n = opts.grid.max(2);
    let pts = valid.grid(n, n);
    let d: Vec<f64> = pts
        .iter()
        .map(|u| chart.eval(*u).map(|s| (x - s).norm()).unwrap_or(f64::INFINITY))
        .collect();
    let p0 = valid.axes[0].periodic;
    let p1 = valid.axes[1].periodic;
    let neighbour = |i: isize, n_: usize, periodic: bool| -> Option<usize> {
        if (0..n_ as isize).contains(&i) {
            Some(i as usize)
        } else if periodic {
            Some(i.rem_euclid(n_ as isize) as usize)
        } else {
            None
        }
    };
    let mut minima: Vec<(f64, ParamPoint)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let here = d[j * n + i];
            if !here.is_finite() {
                continue;
            }
            let mut is_min = true;
            'scan: for dj in -1..=1isize {
                for di in -1..=1isize {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (Some(ii), Some(jj)) = (neighbour(i as isize + di, n, p0), neighbour(j as isize + dj, n, p1)) else {
                        continue;
                    };
                    if d[jj * n + ii] < here {
                        is_min = false;
                        break 'scan;
                    }
                }
            }
            if is_min {
                minima.push((here, pts[j * n + i]));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    minima.truncate(opts.max_seeds);
    minima.into_iter().map(|m| m.1).collect()
}

/// Damped Newton on `F_i = (x - S) . d_i S`, falling back to the
/// metric-preconditioned gradient step where the Hessian of the squared
/// distance is not positive definite.
fn newton(
    chart: &dyn SurfacePatch,
    x: AmbientPoint,
    seed: ParamPoint,
    tol: f64,
    opts: &FootPointOptions,
) -> Result<Candidate, SurfaceError> {
    let domain = chart.domain();
    let mut u = seed;
    let mut jet = chart.jet(u, 2)?;
    let mut iterations = 0;
    let mut res = residual(x, jet.point, &jet.d1);
    while res > tol && iterations < opts.max_iterations {
        iterations += 1;
        let diff = x - jet.point;
        let f = Vector2::new(diff.dot(&jet.d1[0]), diff.dot(&jet.d1[1]));
        let (hess, metric) = hessian_and_metric(x, &jet);
        let pd = hess[(0, 0)] > 0.0 && hess.determinant() > 0.0;
        let step = if pd { hess.try_inverse() } else { None }
            .or_else(|| metric.try_inverse())
            .map(|m| m * f)
            .unwrap_or(f);
        let phi0 = 0.5 * diff.norm_squared();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = domain.clamp(ParamPoint::new(u.u1 + lambda * step.x, u.u2 + lambda * step.y));
            if let Ok(tj) = chart.jet(trial, 2) {
                let phi = 0.5 * (x - tj.point).norm_squared();
                if phi <= phi0 * (1.0 + 1e-12) || residual(x, tj.point, &tj.d1) < res {
                    accepted = Some((trial, tj));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((nu, nj)) = accepted else { break };
        let moved = (nu.u1 - u.u1).abs() + (nu.u2 - u.u2).abs();
        u = nu;
        jet = nj;
        res = residual(x, jet.point, &jet.d1);
        if moved == 0.0 {
            break;
        }
    }
    let (hess, metric) = hessian_and_metric(x, &jet);
    // Generalized eigenproblem H v = lambda G v; a negative eigenvalue marks a saddle or maximum.
    let escape = metric.cholesky().and_then(|ch| {
        let l_inv = ch.l().try_inverse()?;
        let sym = l_inv * hess * l_inv.transpose();
        let eig = nalgebra::SymmetricEigen::new(sym);
        let (k, lambda) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |m, (i, v)| if *v < m.1 { (i, *v) } else { m });
        let scale = hess.norm().max(f64::MIN_POSITIVE);
        (lambda < -1e-9 * scale).then(|| l_inv.transpose() * eig.eigenvectors.column(k))
    });
    Ok(Candidate { u, x: jet.point, distance: (x - jet.point).norm(), iterations, residual: res, escape })
}

/// Nearest point of `patch` to `x` with default solver settings.
pub fn foot_point(patch: &dyn SurfacePatch, x: AmbientPoint, tol: f64) -> Result<ProjectionResult, ProjectionError> {
    foot_point_with(patch, x, tol, &FootPointOptions::default())
}

pub fn foot_point_with(
    patch: &dyn SurfacePatch,
    x: AmbientPoint,
    tol: f64,
    opts: &FootPointOptions,
) -> Result<ProjectionResult, ProjectionError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ProjectionError::BadTolerance(tol));
    }
    if !x.iter().all(|c| c.is_finite()) {
        return Err(ProjectionError::BadQuery);
    }
    let charts = patch.projection_charts();
    let pieces: Vec<(&dyn SurfacePatch, Domain)> = if charts.is_empty() {
        vec![(patch, patch.domain())]
    } else {
        charts.iter().map(|c: &ProjectionChart| (c.chart.as_ref(), c.valid)).collect()
    };

    let mut converged: Vec<Candidate> = Vec::new();
    let mut best_failed: Option<Candidate> = None;
    for (chart, valid) in &pieces {
        let mut queue = grid_seeds(*chart, valid, x, opts);
        let mut nudges = 0;
        while let Some(seed) = queue.pop() {
            let cand = match newton(*chart, x, seed, tol, opts) {
                Ok(cand) => cand,
                Err(_) => continue,
            };
            if let Some(dir) = cand.escape {
                if nudges < 2 * opts.max_seeds {
                    nudges += 2;
                    let h = 1e-3 * (1.0 + cand.u.u1.abs().max(cand.u.u2.abs())) / dir.norm();
                    for sign in [-1.0, 1.0] {
                        queue.push(chart.domain().clamp(ParamPoint::new(cand.u.u1 + sign * h * dir.x, cand.u.u2 + sign * h * dir.y)));
                    }
                }
                continue;
            }
            let inside = valid.contains(cand.u);
            if cand.residual <= tol && inside {
                converged.push(cand);
            } else if inside && best_failed.as_ref().map_or(true, |b| cand.residual < b.residual) {
                best_failed = Some(cand);
            }
        }
    }

    converged.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let mut distinct: Vec<Candidate> = Vec::new();
    for c in converged {
        let scale = 1e-7 * (1.0 + c.distance);
        if distinct.iter().all(|d| (d.x - c.x).norm() > scale) {
            distinct.push(c);
        }
    }
    let mut it = distinct.into_iter();
    let Some(best) = it.next() else {
        let b = best_failed.ok_or(ProjectionError::Surface(SurfaceError::InvalidParameter(
            "no foot-point seed inside the patch".into(),
        )))?;
        return Err(ProjectionError::NoConvergence { best: Box::new(to_result(b, Vec::new())) });
    };
    let ties = it
        .filter(|c| (c.distance - best.distance).abs() < opts.tie_tolerance * best.distance.max(f64::MIN_POSITIVE))
        .map(|c| Alternative { foot_u: c.u, foot_x: c.x, distance: c.distance })
        .collect();
    Ok(to_result(best, ties))
}

fn to_result(c: Candidate, ties: Vec<Alternative>) -> ProjectionResult {
    ProjectionResult { foot_u: c.u, foot_x: c.x, distance: c.distance, iterations: c.iterations, residual: c.residual, ties }
}

/// Offset law `a / (1 + r a)` for the principal curvatures of
/// the constant-distance surface at distance `r`.
pub fn offset_curvature_law(a: f64, r: f64) -> f64 {
    a / (1.0 + r * a)
}

/// Shifts periodic coordinates of `u` by whole periods to land nearest `prev`.
fn unwrap_near(domain: &Domain, u: ParamPoint, prev: ParamPoint) -> ParamPoint {
    let fix = |axis: usize, x: f64, p: f64| {
        let a = domain.axes[axis];
        if a.periodic {
            let w = a.width();
            x + ((p - x) / w).round() * w
        } else {
            x
        }
    };
    ParamPoint::new(fix(0, u.u1, prev.u1), fix(1, u.u2, prev.u2))
}

/// Node-wise foot points of `curve` on `target`, keeping time stamps.
/// Nodes with tied minimizers are recorded in `multi_valued`.
pub fn project_curve(curve: &SampledCurve, target: &dyn SurfacePatch, tol: f64) -> Result<SampledCurve, ProjectionError> {
    let domain = target.domain();
    let mut nodes: Vec<CurveNode> = Vec::with_capacity(curve.len());
    let mut multi_valued = Vec::new();
    for n in &curve.nodes {
        let p = foot_point(target, n.x, tol)?;
        if p.is_multi_valued() {
            multi_valued.push(n.t);
        }
        let u = match nodes.last() {
            Some(prev) => unwrap_near(&domain, p.foot_u, prev.u),
            None => p.foot_u,
        };
        nodes.push(CurveNode { t: n.t, u, x: p.foot_x });
    }
    Ok(SampledCurve { nodes, velocities: None, truncation: curve.truncation, multi_valued })
}

/// Outcome of projecting samples of `s1` to `s2` and back.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub multi_valued: usize,
}

/// Samples `s1` on an interior grid, projects each point to `s2` and back,
/// and reports the largest round-trip deviation in ambient space.
pub fn inverse_consistency(
    s1: &dyn SurfacePatch,
    s2: &dyn SurfacePatch,
    samples: usize,
    tol: f64,
) -> Result<InverseReport, ProjectionError> {
    let d = s1.domain();
    let inset = |i: usize| {
        let a = d.axes[i];
        if a.periodic {
            a
        } else {
            let m = 0.05 * a.width();
            crate::surface::Interval::closed(a.lo + m, a.hi - m)
        }
    };
    let inner = Domain::new(inset(0), inset(1));
    let side = (samples as f64).sqrt().ceil().max(1.0) as usize;
    let mut report = InverseReport { samples: 0, max_deviation: 0.0, multi_valued: 0 };
    for u in inner.grid(side, side).into_iter().take(samples) {
        let x = s1.eval(u)?;
        let there = foot_point(s2, x, tol)?;
        let back = foot_point(s1, there.foot_x, tol)?;
        if there.is_multi_valued() || back.is_multi_valued() {
            report.multi_valued += 1;
        }
        report.samples += 1;
        report.max_deviation = report.max_deviation.max((back.foot_x - x).norm());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{
        CappedCylinderPatch, EllipticCylinderPatch, GraphPatch, PolarAxis, RoundCylinderPatch, SpherePatch,
    };
    use crate::planar::Ellipse;
    use nalgebra::Vector3;
    use std::sync::Arc;

    #[test]
    fn sphere_and_cylinder_examples() {
        let s = SpherePatch::with_axis(1.0, PolarAxis::X1).unwrap();
        let p = foot_point(&s, Vector3::new(0.0, 0.0, 5.0), 1e-10).unwrap();
        assert!((p.foot_x - Vector3::z()).norm() < 1e-9);
        assert!((p.distance - 4.0).abs() < 1e-12);
        assert!(p.residual <= 1e-10);
        assert!(!p.is_multi_valued());

        let c = RoundCylinderPatch::new(1.0).unwrap();
        let p = foot_point(&c, Vector3::new(2.0, 0.0, 7.0), 1e-10).unwrap();
        assert!((p.foot_x - Vector3::new(1.0, 0.0, 7.0)).norm() < 1e-9);
        assert!((p.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graph_normal_offset_recovers_parameter() {
        let g = GraphPatch::quadric(1.0, 2.0).unwrap();
        let u = ParamPoint::new(0.1, 0.2);
        let x = g.eval(u).unwrap() + g.normal(u).unwrap() * 0.5;
        let p = foot_point(&g, x, 1e-10).unwrap();
        assert!((p.foot_u.u1 - 0.1).abs() < 1e-8 && (p.foot_u.u2 - 0.2).abs() < 1e-8);
        assert!((p.distance - 0.5).abs() < 1e-10);
    }

    #[test]
    fn capped_cylinder_feet_on_both_pieces() {
        let cap = CappedCylinderPatch::new(1.0).unwrap();
        let below = foot_point(&cap, Vector3::new(0.0, -2.0, -2.0), 1e-10).unwrap();
        assert!((below.foot_x - Vector3::new(0.0, -1.0, -1.0) / 2f64.sqrt()).norm() < 1e-9);
        let side = foot_point(&cap, Vector3::new(3.0, 0.0, 1.0), 1e-10).unwrap();
        assert!((side.foot_x - Vector3::new(1.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn symmetric_reverse_projection_is_multi_valued() {
        let leaf = OffsetCurve::new(Arc::new(Ellipse::new(1.0, 3.0).unwrap()), OffsetRadius::CurvatureScaled { k: 0.5 })
            .unwrap();
        let outer = EllipticCylinderPatch::new(Arc::new(leaf)).unwrap();
        let p = foot_point(&outer, Vector3::new(1.0, 0.0, 0.0), 1e-10).unwrap();
        assert!(p.is_multi_valued());
        assert!((p.foot_u.u1.sin().abs() - p.ties[0].foot_u.u1.sin().abs()).abs() < 1e-6);
    }

    #[test]
    fn offset_law_examples() {
        assert_eq!(offset_curvature_law(1.0, 1.0), 0.5);
        assert_eq!(offset_curvature_law(0.0, 3.0), 0.0);
        assert_eq!(offset_curvature_law(2.0, 0.5), 1.0);
    }

    #[test]
    fn inverse_consistency_on_concentric_spheres() {
        let a = SpherePatch::new(1.0).unwrap();
        let b = SpherePatch::new(2.0).unwrap();
        let r = inverse_consistency(&a, &b, 16, 1e-10).unwrap();
        assert_eq!(r.samples, 16);
        assert!(r.max_deviation <= 1e-8, "{}", r.max_deviation);
    }

    #[test]
    fn bad_inputs() {
        let s = SpherePatch::new(1.0).unwrap();
        assert!(matches!(foot_point(&s, Vector3::new(0.0, 0.0, 5.0), 0.0), Err(ProjectionError::BadTolerance(_))));
        assert!(matches!(foot_point(&s, Vector3::new(f64::NAN, 0.0, 5.0), 1e-10), Err(ProjectionError::BadQuery)));
    }
}

//! Planar curves: profiles of cylinders and their offsets `c(t) + r(t) n(t)`.
//!
//! Closed curves are parametrized counterclockwise; the outward normal is the
//! unit tangent rotated by -90 degrees, so signed curvature is positive on
//! convex profiles.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector2;
use thiserror::Error;

use crate::numerics::gauss_legendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve derivative of order {requested} unavailable (max {available})")]
    OrderUnavailable { requested: usize, available: usize },
    #[error("curve is singular at t = {t}")]
    Singular { t: f64 },
    #[error("convexity sampling needs at least 64 points, got {0}")]
    GridTooSmall(usize),
    #[error("curve is not closed")]
    NotClosed,
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
}

/// A regular parametrized curve in the plane with analytic derivatives.
///
/// Every implementation supplies derivatives through order 2.
pub trait PlanarCurve: Send + Sync + fmt::Debug {
    /// Parameter period of a closed curve, `None` for open arcs.
    fn period(&self) -> Option<f64>;

    fn max_order(&self) -> usize;

    /// `order`-th derivative with respect to the parameter, if available.
    fn derivative(&self, t: f64, order: usize) -> Option<Vector2<f64>>;

    fn point(&self, t: f64) -> Vector2<f64> {
        self.derivative(t, 0).expect("planar curves supply order 0")
    }

    fn velocity(&self, t: f64) -> Vector2<f64> {
        self.derivative(t, 1).expect("planar curves supply order 1")
    }

    fn acceleration(&self, t: f64) -> Vector2<f64> {
        self.derivative(t, 2).expect("planar curves supply order 2")
    }
}

fn cos_deriv(t: f64, order: usize) -> f64 {
    match order % 4 {
        0 => t.cos(),
        1 => -t.sin(),
        2 => -t.cos(),
        _ => t.sin(),
    }
}

fn sin_deriv(t: f64, order: usize) -> f64 {
    match order % 4 {
        0 => t.sin(),
        1 => t.cos(),
        2 => -t.sin(),
        _ => -t.cos(),
    }
}

/// `(alpha cos t, beta sin t)`, a circle when the semi-axes agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub alpha: f64,
    pub beta: f64,
}

impl Ellipse {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, CurveError> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(CurveError::InvalidParameter(format!(
                "semi-axes must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn circle(radius: f64) -> Result<Self, CurveError> {
        Self::new(radius, radius)
    }

    /// Closed-form curvature `alpha beta / (alpha^2 sin^2 t + beta^2 cos^2 t)^(3/2)`.
    pub fn curvature_closed_form(&self, t: f64) -> f64 {
        let q = self.speed_squared(t);
        self.alpha * self.beta / q.powf(1.5)
    }

    fn speed_squared(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        self.alpha * self.alpha * s * s + self.beta * self.beta * c * c
    }

    /// The constant-ratio leaf `c(t) + (k / a(t)) n(t)` written out in closed form:
    /// `((alpha + k q / alpha) cos t, (beta + k q / beta) sin t)` with
    /// `q = alpha^2 sin^2 t + beta^2 cos^2 t`.
    pub fn leaf_closed_form(&self, k: f64, t: f64) -> Vector2<f64> {
        let q = self.speed_squared(t);
        Vector2::new(
            (self.alpha + k / self.alpha * q) * t.cos(),
            (self.beta + k / self.beta * q) * t.sin(),
        )
    }
}

impl PlanarCurve for Ellipse {
    fn period(&self) -> Option<f64> {
        Some(TAU)
    }

    fn max_order(&self) -> usize {
        8
    }

    fn derivative(&self, t: f64, order: usize) -> Option<Vector2<f64>> {
        (order <= self.max_order()).then(|| {
            Vector2::new(self.alpha * cos_deriv(t, order), self.beta * sin_deriv(t, order))
        })
    }
}

/// Distance profile `r(t)` of an offset curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetRadius {
    /// Parallel curve at fixed distance.
    Constant(f64),
    /// `r(t) = k / a(t)`, `a` the base curvature.
    CurvatureScaled { k: f64 },
}

/// Signed curvature and its first two parameter derivatives.
///
/// Needs base derivatives through order `2 + max_derivative`.
pub fn curvature_jet(curve: &dyn PlanarCurve, t: f64) -> Result<[f64; 3], CurveError> {
    let d = |k: usize| {
        curve.derivative(t, k).ok_or(CurveError::OrderUnavailable {
            requested: k,
            available: curve.max_order(),
        })
    };
    let (c1, c2, c3, c4) = (d(1)?, d(2)?, d(3)?, d(4)?);
    let cross = |a: Vector2<f64>, b: Vector2<f64>| a.x * b.y - a.y * b.x;
    let w = cross(c1, c2);
    let w1 = cross(c1, c3);
    let w2 = cross(c2, c3) + cross(c1, c4);
    let m = c1.norm_squared();
    if !(m > 0.0) {
        return Err(CurveError::Singular { t });
    }
    let m1 = 2.0 * c1.dot(&c2);
    let m2 = 2.0 * (c2.norm_squared() + c1.dot(&c3));
    let a = w * m.powf(-1.5);
    let a1 = w1 * m.powf(-1.5) - 1.5 * w * m1 * m.powf(-2.5);
    let a2 = w2 * m.powf(-1.5) - 3.0 * w1 * m1 * m.powf(-2.5)
        + 3.75 * w * m1 * m1 * m.powf(-3.5)
        - 1.5 * w * m2 * m.powf(-2.5);
    Ok([a, a1, a2])
}

/// The curve `base(t) + r(t) n(t)` with `n` the outward unit normal of the base.
#[derive(Debug, Clone)]
pub struct OffsetCurve {
    base: Arc<dyn PlanarCurve>,
    radius: OffsetRadius,
}

impl OffsetCurve {
    pub fn new(base: Arc<dyn PlanarCurve>, radius: OffsetRadius) -> Result<Self, CurveError> {
        let ok = match radius {
            OffsetRadius::Constant(r) => r >= 0.0 && r.is_finite(),
            OffsetRadius::CurvatureScaled { k } => k >= 0.0 && k.is_finite(),
        };
        if !ok {
            return Err(CurveError::InvalidParameter(format!(
                "offset distance must be non-negative, got {radius:?}"
            )));
        }
        Ok(Self { base, radius })
    }

    pub fn base(&self) -> &Arc<dyn PlanarCurve> {
        &self.base
    }

    pub fn radius(&self) -> OffsetRadius {
        self.radius
    }

    /// `r`, `r'`, `r''` at `t`, filled through `order`.
    pub fn radius_jet(&self, t: f64, order: usize) -> Result<[f64; 3], CurveError> {
        match self.radius {
            OffsetRadius::Constant(r) => Ok([r, 0.0, 0.0]),
            OffsetRadius::CurvatureScaled { k } => {
                let [a, a1, a2] = if order == 0 {
                    [planar_curvature(self.base.as_ref(), t)?, 0.0, 0.0]
                } else {
                    curvature_jet(self.base.as_ref(), t)?
                };
                if !(a > 0.0) {
                    return Err(CurveError::Singular { t });
                }
                Ok([
                    k / a,
                    -k * a1 / (a * a),
                    k * (2.0 * a1 * a1 / (a * a * a) - a2 / (a * a)),
                ])
            }
        }
    }

    fn base_order_needed(&self, order: usize) -> usize {
        match self.radius {
            OffsetRadius::Constant(_) => order + 1,
            OffsetRadius::CurvatureScaled { .. } => {
                if order == 0 {
                    2
                } else {
                    4
                }
            }
        }
    }

    fn eval(&self, t: f64, order: usize) -> Result<Vector2<f64>, CurveError> {
        let need = self.base_order_needed(order);
        if need > self.base.max_order() {
            return Err(CurveError::OrderUnavailable {
                requested: order,
                available: self.max_order(),
            });
        }
        let c: Vec<Vector2<f64>> = (0..=order + 1)
            .map(|k| self.base.derivative(t, k).expect("order checked"))
            .collect();
        let rot = |v: Vector2<f64>| Vector2::new(v.y, -v.x);
        let m = c[1].norm_squared();
        if !(m > 0.0) {
            return Err(CurveError::Singular { t });
        }
        let s = m.sqrt();
        let normal = rot(c[1]) / s;
        let [r, r1, r2] = self.radius_jet(t, order)?;
        if order == 0 {
            return Ok(c[0] + r * normal);
        }
        let m1 = 2.0 * c[1].dot(&c[2]);
        let normal1 = rot(c[2]) / s - rot(c[1]) * (0.5 * m1 / (m * s));
        if order == 1 {
            return Ok(c[1] + r1 * normal + r * normal1);
        }
        let m2 = 2.0 * (c[2].norm_squared() + c[1].dot(&c[3]));
        let normal2 = rot(c[3]) / s - rot(c[2]) * (m1 / (m * s))
            - rot(c[1]) * (0.5 * m2 / (m * s) - 0.75 * m1 * m1 / (m * m * s));
        Ok(c[2] + r2 * normal + 2.0 * r1 * normal1 + r * normal2)
    }
}

impl PlanarCurve for OffsetCurve {
    fn period(&self) -> Option<f64> {
        self.base.period()
    }

    fn max_order(&self) -> usize {
        (0..=2)
            .take_while(|o| self.base_order_needed(*o) <= self.base.max_order())
            .last()
            .unwrap_or(0)
    }

    fn derivative(&self, t: f64, order: usize) -> Option<Vector2<f64>> {
        if order > 2 {
            return None;
        }
        self.eval(t, order).ok()
    }
}

/// Point `c(t) + r(t) n(t)` of an offset curve.
pub fn planar_offset_curve(spec: &OffsetCurve, t: f64) -> Result<Vector2<f64>, CurveError> {
    spec.eval(t, 0)
}

/// Signed curvature `(x'y'' - y'x'') / |c'|^3`.
pub fn planar_curvature(curve: &dyn PlanarCurve, t: f64) -> Result<f64, CurveError> {
    let c1 = curve.velocity(t);
    let c2 = curve.acceleration(t);
    let speed = c1.norm();
    if !(speed > 0.0) {
        return Err(CurveError::Singular { t });
    }
    Ok((c1.x * c2.y - c1.y * c2.x) / (speed * speed * speed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convexity {
    pub convex: bool,
    pub min_curvature: f64,
    pub max_curvature: f64,
    /// Parameter where the minimum was sampled.
    pub argmin: f64,
}

/// Samples signed curvature on `grid` equispaced parameters of a closed curve;
/// convex iff the sign never changes.
pub fn convexity_check(curve: &dyn PlanarCurve, grid: usize) -> Result<Convexity, CurveError> {
    if grid < 64 {
        return Err(CurveError::GridTooSmall(grid));
    }
    let period = curve.period().ok_or(CurveError::NotClosed)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut argmin = 0.0;
    for i in 0..grid {
        let t = period * i as f64 / grid as f64;
        let k = planar_curvature(curve, t)?;
        if k < min {
            min = k;
            argmin = t;
        }
        max = max.max(k);
    }
    let scale = min.abs().max(max.abs());
    let zero = 1e-12 * scale;
    let convex = min >= -zero || max <= zero;
    Ok(Convexity {
        convex,
        min_curvature: min,
        max_curvature: max,
        argmin,
    })
}

/// Arc length of `curve` between parameters `t0` and `t1` (signed).
pub fn arc_length(curve: &dyn PlanarCurve, t0: f64, t1: f64) -> f64 {
    let panels = (8.0 * (t1 - t0).abs()).ceil().max(1.0) as usize * 4;
    gauss_legendre(|t| curve.velocity(t).norm(), t0, t1, panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ellipse13() -> Arc<dyn PlanarCurve> {
        Arc::new(Ellipse::new(1.0, 3.0).unwrap())
    }

    #[test]
    fn ellipse_curvature_matches_classical_values() {
        let e = Ellipse::new(1.0, 3.0).unwrap();
        assert_relative_eq!(planar_curvature(&e, 0.0).unwrap(), 1.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(planar_curvature(&e, FRAC_PI_2).unwrap(), 3.0, epsilon = 1e-14);
        for i in 0..20 {
            let t = 0.31 * i as f64;
            assert_relative_eq!(
                planar_curvature(&e, t).unwrap(),
                e.curvature_closed_form(t),
                max_relative = 1e-13
            );
        }
        let circle = Ellipse::circle(1.0).unwrap();
        assert_relative_eq!(planar_curvature(&circle, 1.234).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn curvature_jet_matches_finite_differences() {
        let e = Ellipse::new(1.0, 3.0).unwrap();
        let h = 1e-4;
        for t in [0.2, 0.9, 2.5, 4.0] {
            let [a, a1, a2] = curvature_jet(&e, t).unwrap();
            let k = |s: f64| e.curvature_closed_form(s);
            assert_relative_eq!(a, k(t), max_relative = 1e-13);
            let fd1 = (k(t + h) - k(t - h)) / (2.0 * h);
            let fd2 = (k(t + h) - 2.0 * k(t) + k(t - h)) / (h * h);
            assert!((a1 - fd1).abs() < 1e-6 * (1.0 + a1.abs()), "{a1} vs {fd1}");
            assert!((a2 - fd2).abs() < 1e-4 * (1.0 + a2.abs()), "{a2} vs {fd2}");
        }
    }

    #[test]
    fn ellipse_leaf_examples() {
        let spec = OffsetCurve::new(ellipse13(), OffsetRadius::CurvatureScaled { k: 0.5 }).unwrap();
        let p0 = planar_offset_curve(&spec, 0.0).unwrap();
        assert_relative_eq!(p0.x, 5.5, epsilon = 1e-12);
        assert!(p0.y.abs() < 1e-12);
        let p1 = planar_offset_curve(&spec, FRAC_PI_2).unwrap();
        assert!(p1.x.abs() < 1e-12);
        assert_relative_eq!(p1.y, 3.0 + 0.5 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_constant_offset_lands_on_larger_circle() {
        let spec = OffsetCurve::new(
            Arc::new(Ellipse::circle(1.0).unwrap()),
            OffsetRadius::Constant(1.0),
        )
        .unwrap();
        for i in 0..12 {
            let p = planar_offset_curve(&spec, 0.5 * i as f64).unwrap();
            assert_relative_eq!(p.norm(), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn offset_curve_derivatives_match_finite_differences() {
        for radius in [OffsetRadius::Constant(0.7), OffsetRadius::CurvatureScaled { k: 1.5 }] {
            let spec = OffsetCurve::new(ellipse13(), radius).unwrap();
            assert_eq!(spec.max_order(), 2);
            let h = 1e-5;
            for t in [0.1, 1.0, 2.2, 5.0] {
                let fd1 = (spec.point(t + h) - spec.point(t - h)) / (2.0 * h);
                let fd2 = (spec.velocity(t + h) - spec.velocity(t - h)) / (2.0 * h);
                assert!((spec.velocity(t) - fd1).norm() < 1e-6 * (1.0 + fd1.norm()));
                assert!((spec.acceleration(t) - fd2).norm() < 1e-6 * (1.0 + fd2.norm()));
            }
        }
    }

    #[test]
    fn convexity_of_ellipse_and_leaves() {
        let e = Ellipse::new(1.0, 3.0).unwrap();
        let c = convexity_check(&e, 256).unwrap();
        assert!(c.convex);
        assert_relative_eq!(c.min_curvature, 1.0 / 9.0, epsilon = 1e-14);

        let leaf = |k| OffsetCurve::new(ellipse13(), OffsetRadius::CurvatureScaled { k }).unwrap();
        assert!(convexity_check(&leaf(0.5), 512).unwrap().convex);
        let far = convexity_check(&leaf(1.5), 512).unwrap();
        assert!(!far.convex);
        assert!(far.min_curvature < 0.0);
        assert_eq!(convexity_check(&e, 10), Err(CurveError::GridTooSmall(10)));
    }

    #[test]
    fn arc_length_of_circle() {
        let c = Ellipse::circle(2.0).unwrap();
        assert_relative_eq!(arc_length(&c, 0.0, 2.0 * PI), 4.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Ellipse::new(-1.0, 2.0).is_err());
        assert!(OffsetCurve::new(ellipse13(), OffsetRadius::Constant(-0.1)).is_err());
    }
}

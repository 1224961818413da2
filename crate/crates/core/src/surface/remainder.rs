//! Higher-order remainders `h` of the local graph form
//! `z = -(a1 x1^2 + a2 x2^2) / 2 - h(x1, x2)`.
//!
//! A remainder vanishes at the origin together with its first and second
//! partials, and supplies analytic partials through order 3.

use std::fmt;

use super::{ParamPoint, SurfaceError};

pub trait HeightRemainder: Send + Sync + fmt::Debug {
    fn value(&self, u: ParamPoint) -> f64;
    fn gradient(&self, u: ParamPoint) -> [f64; 2];
    fn hessian(&self, u: ParamPoint) -> [[f64; 2]; 2];
    fn third(&self, u: ParamPoint) -> [[[f64; 2]; 2]; 2];

    /// `d1^m d2^n h` for `m + n <= 3`.
    fn partial(&self, u: ParamPoint, m: usize, n: usize) -> f64 {
        match m + n {
            0 => self.value(u),
            1 => self.gradient(u)[n],
            2 => self.hessian(u)[if m > 0 { 0 } else { 1 }][if n > 0 { 1 } else { 0 }],
            3 => {
                let t = self.third(u);
                match n {
                    0 => t[0][0][0],
                    1 => t[0][0][1],
                    2 => t[0][1][1],
                    _ => t[1][1][1],
                }
            }
            _ => panic!("remainder partials are supplied through order 3"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroRemainder;

impl HeightRemainder for ZeroRemainder {
    fn value(&self, _: ParamPoint) -> f64 {
        0.0
    }
    fn gradient(&self, _: ParamPoint) -> [f64; 2] {
        [0.0; 2]
    }
    fn hessian(&self, _: ParamPoint) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
    fn third(&self, _: ParamPoint) -> [[[f64; 2]; 2]; 2] {
        [[[0.0; 2]; 2]; 2]
    }
}

/// `sum c x1^p x2^q` over terms of total degree at least 3.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialRemainder {
    terms: Vec<(f64, u32, u32)>,
}

fn falling(p: u32, k: u32) -> f64 {
    (0..k).map(|i| (p as f64) - i as f64).product()
}

impl PolynomialRemainder {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Result<Self, SurfaceError> {
        if let Some(bad) = terms.iter().find(|(c, p, q)| p + q < 3 && *c != 0.0) {
            return Err(SurfaceError::InvalidParameter(format!(
                "remainder term x1^{} x2^{} has degree below 3",
                bad.1, bad.2
            )));
        }
        Ok(Self { terms })
    }

    /// `c x1^2 x2^2`; with `c = a1 a2^2 / 4` this is the quartic term that
    /// cancels the leading geodesic-preservation residual.
    pub fn cross_quartic(c: f64) -> Self {
        Self { terms: vec![(c, 2, 2)] }
    }

    fn eval(&self, u: ParamPoint, m: u32, n: u32) -> f64 {
        self.terms
            .iter()
            .filter(|(_, p, q)| *p >= m && *q >= n)
            .map(|(c, p, q)| {
                c * falling(*p, m) * falling(*q, n) * u.u1.powi((p - m) as i32) * u.u2.powi((q - n) as i32)
            })
            .sum()
    }
}

impl HeightRemainder for PolynomialRemainder {
    fn value(&self, u: ParamPoint) -> f64 {
        self.eval(u, 0, 0)
    }
    fn gradient(&self, u: ParamPoint) -> [f64; 2] {
        [self.eval(u, 1, 0), self.eval(u, 0, 1)]
    }
    fn hessian(&self, u: ParamPoint) -> [[f64; 2]; 2] {
        let xy = self.eval(u, 1, 1);
        [[self.eval(u, 2, 0), xy], [xy, self.eval(u, 0, 2)]]
    }
    fn third(&self, u: ParamPoint) -> [[[f64; 2]; 2]; 2] {
        let xxx = self.eval(u, 3, 0);
        let xxy = self.eval(u, 2, 1);
        let xyy = self.eval(u, 1, 2);
        let yyy = self.eval(u, 0, 3);
        [[[xxx, xxy], [xxy, xyy]], [[xxy, xyy], [xyy, yyy]]]
    }
}

/// Remainder that turns the graph with `a1 = a2 = a` into the sphere of
/// radius `1/a` touching the tangent plane at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereRemainder {
    pub a: f64,
}

/// Remainder that turns the graph with curvature `a` in `x1` (and zero in
/// `x2`) into a round cylinder of radius `1/a` along the `x2` axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderRemainder {
    pub a: f64,
}

/// Partials of `R - sqrt(R^2 - |x|^2) - a |x|^2 / 2` in `dim` coordinates,
/// `R = 1/a`. Coordinates past `dim` do not enter.
fn round_partials(a: f64, x: [f64; 2], dim: usize) -> ([f64; 2], [[f64; 2]; 2], [[[f64; 2]; 2]; 2], f64) {
    let radius = 1.0 / a;
    let mut xs = [0.0; 2];
    xs[..dim].copy_from_slice(&x[..dim]);
    let rho2 = xs[0] * xs[0] + xs[1] * xs[1];
    let s = (radius * radius - rho2).sqrt();
    let value = radius - s - 0.5 * a * rho2;
    let delta = |i: usize, j: usize| if i == j && i < dim { 1.0 } else { 0.0 };
    let mut g = [0.0; 2];
    let mut h = [[0.0; 2]; 2];
    let mut t = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        g[i] = xs[i] / s - a * xs[i];
        for j in 0..2 {
            h[i][j] = delta(i, j) / s + xs[i] * xs[j] / (s * s * s) - a * delta(i, j);
            for k in 0..2 {
                t[i][j][k] = (delta(i, j) * xs[k] + delta(i, k) * xs[j] + delta(j, k) * xs[i])
                    / (s * s * s)
                    + 3.0 * xs[i] * xs[j] * xs[k] / s.powi(5);
            }
        }
    }
    (g, h, t, value)
}

impl HeightRemainder for SphereRemainder {
    fn value(&self, u: ParamPoint) -> f64 {
        round_partials(self.a, [u.u1, u.u2], 2).3
    }
    fn gradient(&self, u: ParamPoint) -> [f64; 2] {
        round_partials(self.a, [u.u1, u.u2], 2).0
    }
    fn hessian(&self, u: ParamPoint) -> [[f64; 2]; 2] {
        round_partials(self.a, [u.u1, u.u2], 2).1
    }
    fn third(&self, u: ParamPoint) -> [[[f64; 2]; 2]; 2] {
        round_partials(self.a, [u.u1, u.u2], 2).2
    }
}

impl HeightRemainder for CylinderRemainder {
    fn value(&self, u: ParamPoint) -> f64 {
        round_partials(self.a, [u.u1, u.u2], 1).3
    }
    fn gradient(&self, u: ParamPoint) -> [f64; 2] {
        round_partials(self.a, [u.u1, u.u2], 1).0
    }
    fn hessian(&self, u: ParamPoint) -> [[f64; 2]; 2] {
        round_partials(self.a, [u.u1, u.u2], 1).1
    }
    fn third(&self, u: ParamPoint) -> [[[f64; 2]; 2]; 2] {
        round_partials(self.a, [u.u1, u.u2], 1).2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_origin(h: &dyn HeightRemainder) {
        let o = ParamPoint::ORIGIN;
        assert_eq!(h.value(o), 0.0);
        assert!(h.gradient(o).iter().all(|g| g.abs() < 1e-15));
        assert!(h.hessian(o).iter().flatten().all(|g| g.abs() < 1e-12));
    }

    fn check_consistency(h: &dyn HeightRemainder, u: ParamPoint) {
        let step = |x: f64| 1e-5 * (1.0 + x.abs());
        for axis in 0..2 {
            let e = step(u.get(axis));
            let (p, m) = if axis == 0 {
                (ParamPoint::new(u.u1 + e, u.u2), ParamPoint::new(u.u1 - e, u.u2))
            } else {
                (ParamPoint::new(u.u1, u.u2 + e), ParamPoint::new(u.u1, u.u2 - e))
            };
            let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
            assert!(rel(h.gradient(u)[axis], (h.value(p) - h.value(m)) / (2.0 * e)) < 1e-6);
            for i in 0..2 {
                let fd = (h.gradient(p)[i] - h.gradient(m)[i]) / (2.0 * e);
                assert!(rel(h.hessian(u)[i][axis], fd) < 1e-6);
                for j in 0..2 {
                    let fd = (h.hessian(p)[i][j] - h.hessian(m)[i][j]) / (2.0 * e);
                    assert!(rel(h.third(u)[i][j][axis], fd) < 1e-6, "{h:?} third {i}{j}{axis}");
                }
            }
        }
    }

    #[test]
    fn remainders_vanish_to_second_order_at_origin() {
        check_origin(&ZeroRemainder);
        check_origin(&PolynomialRemainder::cross_quartic(0.25));
        check_origin(&SphereRemainder { a: 2.0 });
        check_origin(&CylinderRemainder { a: 0.5 });
    }

    #[test]
    fn remainder_partials_are_consistent() {
        let poly = PolynomialRemainder::new(vec![(0.25, 2, 2), (-1.5, 3, 0), (0.7, 1, 4)]).unwrap();
        let sphere = SphereRemainder { a: 1.0 };
        let cyl = CylinderRemainder { a: 2.0 };
        for u in [ParamPoint::new(0.2, 0.1), ParamPoint::new(-0.3, 0.25), ParamPoint::new(0.05, -0.4)] {
            check_consistency(&poly, u);
            check_consistency(&sphere, u);
            check_consistency(&cyl, ParamPoint::new(u.u1 * 0.5, u.u2));
        }
    }

    #[test]
    fn cross_quartic_partials_by_hand() {
        // h = x1^2 x2^2 / 4 at (0.2, 0.1)
        let h = PolynomialRemainder::cross_quartic(0.25);
        let u = ParamPoint::new(0.2, 0.1);
        let g = h.gradient(u);
        assert!((g[0] - 0.5 * 0.2 * 0.01).abs() < 1e-16);
        assert!((g[1] - 0.5 * 0.04 * 0.1).abs() < 1e-16);
        assert_eq!(h.partial(u, 2, 1), 0.1);
    }

    #[test]
    fn low_degree_terms_rejected() {
        assert!(PolynomialRemainder::new(vec![(1.0, 1, 1)]).is_err());
        assert!(PolynomialRemainder::new(vec![(0.0, 1, 1), (1.0, 3, 0)]).is_ok());
    }
}

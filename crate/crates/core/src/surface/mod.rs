//! Parametric surface patches and their differential invariants.
//!
//! Every patch supplies analytic partial derivatives of its embedding; the
//! metric, unit normal, shape operator and Christoffel symbols are computed
//! from those. Finite differences appear only in the validation helpers at
//! the bottom of this module.
//!
//! Orientation: the normal is `d1 S x d2 S / |d1 S x d2 S|`, which every patch
//! arranges to point away from the convex body. Principal curvatures are the
//! eigenvalues of `-g^{-1} II`, positive on convex surfaces.

mod capped;
mod cylinder;
mod graph;
mod offset;
mod remainder;
mod sphere;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2, Vector3};
use thiserror::Error;

pub use capped::CappedCylinderPatch;
pub use cylinder::{EllipticCylinderPatch, RoundCylinderPatch};
pub use graph::GraphPatch;
pub use offset::{offset_surface, OffsetPatch};
pub use remainder::{
    CylinderRemainder, HeightRemainder, PolynomialRemainder, SphereRemainder, ZeroRemainder,
};
pub use sphere::{PolarAxis, SpherePatch};

pub type AmbientPoint = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("parameter point ({u1}, {u2}) lies outside the patch domain")]
    OutOfDomain { u1: f64, u2: f64 },
    #[error("patch is not immersed at ({u1}, {u2}): metric determinant {det}")]
    Degenerate { u1: f64, u2: f64, det: f64 },
    #[error("partials of order {requested} unavailable; patch supplies order {available}")]
    OrderUnavailable { requested: usize, available: usize },
    #[error("invalid patch parameter: {0}")]
    InvalidParameter(String),
}

/// A point `(u1, u2)` of a patch's parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamPoint {
    pub u1: f64,
    pub u2: f64,
}

impl ParamPoint {
    pub const ORIGIN: ParamPoint = ParamPoint { u1: 0.0, u2: 0.0 };

    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn get(&self, i: usize) -> f64 {
        match i {
            0 => self.u1,
            1 => self.u2,
            _ => panic!("parameter index {i} out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.u1, self.u2)
    }
}

impl From<Vector2<f64>> for ParamPoint {
    fn from(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }
}

impl From<[f64; 2]> for ParamPoint {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

/// One coordinate range of a parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Interval {
    pub const fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: false }
    }

    pub const fn periodic(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: true }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        if self.periodic {
            return true;
        }
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        x >= self.lo - slack && x <= self.hi + slack
    }

    fn wrap(&self, x: f64) -> f64 {
        if self.periodic {
            self.lo + (x - self.lo).rem_euclid(self.width())
        } else {
            x
        }
    }

    fn clamp(&self, x: f64) -> f64 {
        if self.periodic {
            x
        } else {
            x.clamp(self.lo, self.hi)
        }
    }

    fn samples(&self, n: usize) -> Vec<f64> {
        if self.periodic {
            (0..n).map(|i| self.lo + self.width() * i as f64 / n as f64).collect()
        } else if n == 1 {
            vec![0.5 * (self.lo + self.hi)]
        } else {
            (0..n)
                .map(|i| self.lo + self.width() * i as f64 / (n - 1) as f64)
                .collect()
        }
    }
}

/// Rectangular (or periodic x linear) parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub axes: [Interval; 2],
}

impl Domain {
    pub const fn new(first: Interval, second: Interval) -> Self {
        Self { axes: [first, second] }
    }

    pub const fn rect(lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> Self {
        Self::new(Interval::closed(lo1, hi1), Interval::closed(lo2, hi2))
    }

    /// Angle in `[0, 2 pi)` on the first axis, closed range on the second.
    pub const fn angular(lo2: f64, hi2: f64) -> Self {
        Self::new(Interval::periodic(0.0, TAU), Interval::closed(lo2, hi2))
    }

    pub fn contains(&self, u: ParamPoint) -> bool {
        self.axes[0].contains(u.u1) && self.axes[1].contains(u.u2)
    }

    /// Reduces periodic coordinates into their base interval.
    pub fn wrap(&self, u: ParamPoint) -> ParamPoint {
        ParamPoint::new(self.axes[0].wrap(u.u1), self.axes[1].wrap(u.u2))
    }

    pub fn clamp(&self, u: ParamPoint) -> ParamPoint {
        ParamPoint::new(self.axes[0].clamp(u.u1), self.axes[1].clamp(u.u2))
    }

    /// Tensor grid, first index fastest. Periodic axes omit the duplicate endpoint.
    pub fn grid(&self, n1: usize, n2: usize) -> Vec<ParamPoint> {
        let s1 = self.axes[0].samples(n1);
        let s2 = self.axes[1].samples(n2);
        s2.iter()
            .flat_map(|b| s1.iter().map(move |a| ParamPoint::new(*a, *b)))
            .collect()
    }

    /// Parameter distance with periodic wrap-around.
    pub fn separation(&self, a: ParamPoint, b: ParamPoint) -> f64 {
        let d = |axis: &Interval, x: f64, y: f64| {
            let raw = (x - y).abs();
            if axis.periodic {
                let w = axis.width();
                let r = raw.rem_euclid(w);
                r.min(w - r)
            } else {
                raw
            }
        };
        d(&self.axes[0], a.u1, b.u1).hypot(d(&self.axes[1], a.u2, b.u2))
    }
}

/// Embedding and its partials through some order at one parameter point.
///
/// `d1[i] = d_i S`, `d2[i][j] = d_i d_j S`, `d3[i][j][k] = d_i d_j d_k S`.
/// Entries above `order` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub order: usize,
    pub point: AmbientPoint,
    pub d1: [Vector3<f64>; 2],
    pub d2: [[Vector3<f64>; 2]; 2],
    pub d3: [[[Vector3<f64>; 2]; 2]; 2],
}

impl Jet {
    /// Builds a jet from a closure returning `d1^m d2^n S`.
    pub(crate) fn from_partials(order: usize, f: impl Fn(usize, usize) -> Vector3<f64>) -> Self {
        let z = Vector3::zeros();
        let mut jet = Jet {
            order,
            point: f(0, 0),
            d1: [z; 2],
            d2: [[z; 2]; 2],
            d3: [[[z; 2]; 2]; 2],
        };
        if order >= 1 {
            for i in 0..2 {
                jet.d1[i] = f(1 - i, i);
            }
        }
        if order >= 2 {
            for i in 0..2 {
                for j in 0..2 {
                    let n = i + j;
                    jet.d2[i][j] = f(2 - n, n);
                }
            }
        }
        if order >= 3 {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let n = i + j + k;
                        jet.d3[i][j][k] = f(3 - n, n);
                    }
                }
            }
        }
        jet
    }
}

/// A domain of a patch on which the patch agrees with a smooth chart, used
/// by the foot-point solver on surfaces that are only piecewise `C^2`.
#[derive(Debug, Clone)]
pub struct ProjectionChart {
    pub chart: Arc<dyn SurfacePatch>,
    /// Part of the chart's parameter domain that belongs to the surface.
    pub valid: Domain,
}

/// A parametric map from a 2-D domain into 3-space with analytic partials.
pub trait SurfacePatch: Send + Sync + fmt::Debug {
    fn domain(&self) -> Domain;

    /// Highest order of partial derivatives the patch can supply.
    fn max_order(&self) -> usize;

    /// Partials through `order` without a domain check.
    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError>;

    /// Christoffel symbols of the induced metric. The default uses
    /// `Gamma^k_ij = g^{kl} (d_i d_j S . d_l S)`.
    fn christoffel(&self, u: ParamPoint) -> Result<Christoffel, SurfaceError> {
        let jet = self.jet(u, 2)?;
        christoffel_from_jet(&jet, u)
    }

    /// Smooth pieces for projection; empty when the patch is `C^2` throughout.
    fn projection_charts(&self) -> Vec<ProjectionChart> {
        Vec::new()
    }

    fn jet(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        if !self.domain().contains(u) {
            return Err(SurfaceError::OutOfDomain { u1: u.u1, u2: u.u2 });
        }
        if order > self.max_order() {
            return Err(SurfaceError::OrderUnavailable {
                requested: order,
                available: self.max_order(),
            });
        }
        self.jet_unchecked(u, order)
    }

    fn eval(&self, u: ParamPoint) -> Result<AmbientPoint, SurfaceError> {
        Ok(self.jet(u, 0)?.point)
    }

    /// Outward unit normal.
    fn normal(&self, u: ParamPoint) -> Result<Vector3<f64>, SurfaceError> {
        let jet = self.jet(u, 1)?;
        unit_normal(&jet, u).map(|(n, _)| n)
    }
}

impl<T: SurfacePatch + ?Sized> SurfacePatch for Arc<T> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        (**self).jet_unchecked(u, order)
    }
    fn christoffel(&self, u: ParamPoint) -> Result<Christoffel, SurfaceError> {
        (**self).christoffel(u)
    }
    fn projection_charts(&self) -> Vec<ProjectionChart> {
        (**self).projection_charts()
    }
}

pub(crate) fn unit_normal(jet: &Jet, u: ParamPoint) -> Result<(Vector3<f64>, f64), SurfaceError> {
    let n = jet.d1[0].cross(&jet.d1[1]);
    let v = n.norm();
    if !(v > 0.0) || !v.is_finite() {
        return Err(SurfaceError::Degenerate { u1: u.u1, u2: u.u2, det: v * v });
    }
    Ok((n / v, v))
}

/// First and second fundamental forms and the unit normal at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    /// Metric determinant.
    pub det: f64,
    /// Second form `d_i d_j S . normal`.
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub normal: Vector3<f64>,
    /// `|d1 S x d2 S|`; equals `sqrt(1 + z1^2 + z2^2)` on graph patches.
    pub normalizer: f64,
}

impl FundamentalForms {
    pub fn metric(&self) -> Matrix2<f64> {
        Matrix2::new(self.g11, self.g12, self.g12, self.g22)
    }

    pub fn inverse_metric(&self) -> Matrix2<f64> {
        Matrix2::new(self.g22, -self.g12, -self.g12, self.g11) / self.det
    }

    pub fn second(&self) -> Matrix2<f64> {
        Matrix2::new(self.l, self.m, self.m, self.n)
    }
}

pub fn fundamental_forms(patch: &dyn SurfacePatch, u: ParamPoint) -> Result<FundamentalForms, SurfaceError> {
    forms_from_jet(&patch.jet(u, 2)?, u)
}

pub(crate) fn forms_from_jet(jet: &Jet, u: ParamPoint) -> Result<FundamentalForms, SurfaceError> {
    let [e1, e2] = jet.d1;
    let g11 = e1.dot(&e1);
    let g12 = e1.dot(&e2);
    let g22 = e2.dot(&e2);
    let det = g11 * g22 - g12 * g12;
    if !(g11 > 0.0 && det > 0.0) {
        return Err(SurfaceError::Degenerate { u1: u.u1, u2: u.u2, det });
    }
    let (normal, normalizer) = unit_normal(jet, u)?;
    Ok(FundamentalForms {
        g11,
        g12,
        g22,
        det,
        l: jet.d2[0][0].dot(&normal),
        m: jet.d2[0][1].dot(&normal),
        n: jet.d2[1][1].dot(&normal),
        normal,
        normalizer,
    })
}

/// Principal curvatures (`k1 >= k2`) and unit-length, `g`-orthogonal
/// parameter-space directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalCurvatures {
    pub k1: f64,
    pub k2: f64,
    pub dir1: Vector2<f64>,
    pub dir2: Vector2<f64>,
}

impl PrincipalCurvatures {
    pub fn gaussian(&self) -> f64 {
        self.k1 * self.k2
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.k1 + self.k2)
    }
}

pub fn principal_curvatures(
    patch: &dyn SurfacePatch,
    u: ParamPoint,
) -> Result<PrincipalCurvatures, SurfaceError> {
    Ok(curvatures_from_forms(&fundamental_forms(patch, u)?))
}

pub fn curvatures_from_forms(f: &FundamentalForms) -> PrincipalCurvatures {
    let g = f.metric();
    let b = -f.second();
    // Shape operator W = g^{-1} b; the discriminant is formed from its
    // traceless part so umbilics do not lose half the digits.
    let w = f.inverse_metric() * b;
    let mean = 0.5 * (w[(0, 0)] + w[(1, 1)]);
    let half_gap = 0.5 * (w[(0, 0)] - w[(1, 1)]);
    let spread = (half_gap * half_gap + w[(0, 1)] * w[(1, 0)]).max(0.0).sqrt();
    let (k1, k2) = (mean + spread, mean - spread);

    let g_norm = |v: Vector2<f64>| (v.dot(&(g * v))).sqrt();
    let scale = k1.abs().max(k2.abs()).max(1e-300);
    let dir1 = if spread <= 1e-12 * scale {
        Vector2::new(1.0, 0.0)
    } else {
        let shifted = b - g * k1;
        let r0 = Vector2::new(shifted[(0, 0)], shifted[(0, 1)]);
        let r1 = Vector2::new(shifted[(1, 0)], shifted[(1, 1)]);
        let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
        Vector2::new(-row.y, row.x)
    };
    let dir1 = dir1 / g_norm(dir1);
    let p = g * dir1;
    let dir2 = Vector2::new(-p.y, p.x);
    let dir2 = dir2 / g_norm(dir2);
    PrincipalCurvatures { k1, k2, dir1, dir2 }
}

/// Christoffel symbols of the second kind, `gamma[k][i][j] = Gamma^k_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    pub fn max_abs_difference(&self, other: &Christoffel) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((self.gamma[k][i][j] - other.gamma[k][i][j]).abs());
                }
            }
        }
        worst
    }

    /// `-Gamma^k_ij v^i v^j`, the geodesic acceleration for velocity `v`.
    pub fn contract(&self, v: Vector2<f64>) -> Vector2<f64> {
        let mut a = Vector2::zeros();
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += self.gamma[k][i][j] * v[i] * v[j];
                }
            }
            a[k] = -s;
        }
        a
    }
}

pub fn christoffel(patch: &dyn SurfacePatch, u: ParamPoint) -> Result<Christoffel, SurfaceError> {
    patch.christoffel(u)
}

pub(crate) fn christoffel_from_jet(jet: &Jet, u: ParamPoint) -> Result<Christoffel, SurfaceError> {
    let forms = forms_from_jet(jet, u)?;
    let ginv = forms.inverse_metric();
    let mut out = Christoffel::default();
    for i in 0..2 {
        for j in 0..2 {
            let proj = Vector2::new(jet.d2[i][j].dot(&jet.d1[0]), jet.d2[i][j].dot(&jet.d1[1]));
            let gamma = ginv * proj;
            for k in 0..2 {
                out.gamma[k][i][j] = gamma[k];
            }
        }
    }
    Ok(out)
}

/// Central-difference step used by the validation helpers.
pub fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// Christoffel symbols from `1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)` with
/// central-difference metric derivatives. Validation oracle only.
pub fn christoffel_from_metric_fd(
    patch: &dyn SurfacePatch,
    u: ParamPoint,
) -> Result<Christoffel, SurfaceError> {
    let metric = |p: ParamPoint| -> Result<Matrix2<f64>, SurfaceError> {
        Ok(forms_from_jet(&patch.jet(p, 2)?, p)?.metric())
    };
    let g = metric(u)?;
    let ginv = g.try_inverse().ok_or(SurfaceError::Degenerate {
        u1: u.u1,
        u2: u.u2,
        det: g.determinant(),
    })?;
    let mut dg = [Matrix2::zeros(); 2];
    for (axis, slot) in dg.iter_mut().enumerate() {
        let h = fd_step(u.get(axis));
        let shift = |s: f64| {
            if axis == 0 {
                ParamPoint::new(u.u1 + s, u.u2)
            } else {
                ParamPoint::new(u.u1, u.u2 + s)
            }
        };
        *slot = (metric(shift(h))? - metric(shift(-h))?) / (2.0 * h);
    }
    let mut out = Christoffel::default();
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out.gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    Ok(out)
}

/// Largest relative mismatch between each supplied partial of order
/// `1..=patch.max_order()` and a central difference of the order below.
pub fn derivative_consistency(patch: &dyn SurfacePatch, u: ParamPoint) -> Result<f64, SurfaceError> {
    let top = patch.max_order();
    let base = patch.jet(u, top)?;
    let mut worst = 0.0_f64;
    let mut record = |analytic: Vector3<f64>, numeric: Vector3<f64>| {
        let scale = 1.0 + analytic.norm().max(numeric.norm());
        worst = worst.max((analytic - numeric).norm() / scale);
    };
    for axis in 0..2 {
        let h = fd_step(u.get(axis));
        let (plus, minus) = if axis == 0 {
            (ParamPoint::new(u.u1 + h, u.u2), ParamPoint::new(u.u1 - h, u.u2))
        } else {
            (ParamPoint::new(u.u1, u.u2 + h), ParamPoint::new(u.u1, u.u2 - h))
        };
        let jp = patch.jet(plus, top)?;
        let jm = patch.jet(minus, top)?;
        let diff = |a: Vector3<f64>, b: Vector3<f64>| (a - b) / (2.0 * h);
        if top >= 1 {
            record(base.d1[axis], diff(jp.point, jm.point));
        }
        for i in 0..2 {
            if top >= 2 {
                record(base.d2[i][axis], diff(jp.d1[i], jm.d1[i]));
            }
            for j in 0..2 {
                if top >= 3 {
                    record(base.d3[i][j][axis], diff(jp.d2[i][j], jm.d2[i][j]));
                }
            }
        }
    }
    Ok(worst)
}

use std::sync::Arc;

use nalgebra::Vector3;

use super::{
    Christoffel, CylinderRemainder, Domain, HeightRemainder, Jet, ParamPoint,
    SphereRemainder, SurfaceError, SurfacePatch, ZeroRemainder,
};

/// Local graph form of a convex surface around a point placed at the origin
/// with tangent plane `z = 0`:
/// `S(x1, x2) = (x1, x2, -(a1 x1^2 + a2 x2^2) / 2 - h(x1, x2))`.
#[derive(Debug, Clone)]
pub struct GraphPatch {
    a1: f64,
    a2: f64,
    h: Arc<dyn HeightRemainder>,
    domain: Domain,
}

impl GraphPatch {
    pub fn new(a1: f64, a2: f64, h: Arc<dyn HeightRemainder>) -> Result<Self, SurfaceError> {
        if !(a1 >= 0.0 && a2 >= 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(SurfaceError::InvalidParameter(format!(
                "principal curvatures must be non-negative, got ({a1}, {a2})"
            )));
        }
        Ok(Self {
            a1,
            a2,
            h,
            domain: Domain::rect(-1.0, 1.0, -1.0, 1.0),
        })
    }

    /// Pure quadric, `h = 0`.
    pub fn quadric(a1: f64, a2: f64) -> Result<Self, SurfaceError> {
        Self::new(a1, a2, Arc::new(ZeroRemainder))
    }

    /// Cap of the sphere of radius `1/a` as a graph over its tangent plane.
    pub fn sphere(a: f64) -> Result<Self, SurfaceError> {
        if !(a > 0.0) {
            return Err(SurfaceError::InvalidParameter(format!("sphere needs a > 0, got {a}")));
        }
        let w = 0.6 / a;
        Ok(Self::new(a, a, Arc::new(SphereRemainder { a }))?.with_domain(Domain::rect(-w, w, -w, w)))
    }

    /// Round cylinder of radius `1/a` along the `x2` axis.
    pub fn round_cylinder(a: f64) -> Result<Self, SurfaceError> {
        if !(a > 0.0) {
            return Err(SurfaceError::InvalidParameter(format!("cylinder needs a > 0, got {a}")));
        }
        let w = 0.8 / a;
        Ok(Self::new(a, 0.0, Arc::new(CylinderRemainder { a }))?.with_domain(Domain::rect(-w, w, -1.0, 1.0)))
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn remainder(&self) -> &Arc<dyn HeightRemainder> {
        &self.h
    }

    /// `z_i = a_i x_i + d_i h`.
    pub fn z_fields(&self, u: ParamPoint) -> (f64, f64) {
        let g = self.h.gradient(u);
        (self.a1 * u.u1 + g[0], self.a2 * u.u2 + g[1])
    }

    /// `d_i z_j = a_j delta_ij + d_i d_j h`.
    pub fn z_gradient(&self, u: ParamPoint) -> [[f64; 2]; 2] {
        let hh = self.h.hessian(u);
        [[self.a1 + hh[0][0], hh[0][1]], [hh[1][0], self.a2 + hh[1][1]]]
    }

    fn height_partial(&self, u: ParamPoint, m: usize, n: usize) -> f64 {
        let quad = match (m, n) {
            (0, 0) => -0.5 * (self.a1 * u.u1 * u.u1 + self.a2 * u.u2 * u.u2),
            (1, 0) => -self.a1 * u.u1,
            (0, 1) => -self.a2 * u.u2,
            (2, 0) => -self.a1,
            (0, 2) => -self.a2,
            _ => 0.0,
        };
        quad - self.h.partial(u, m, n)
    }
}

impl SurfacePatch for GraphPatch {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn max_order(&self) -> usize {
        3
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        Ok(Jet::from_partials(order, |m, n| {
            let x = match (m, n) {
                (0, 0) => u.u1,
                (1, 0) => 1.0,
                _ => 0.0,
            };
            let y = match (m, n) {
                (0, 0) => u.u2,
                (0, 1) => 1.0,
                _ => 0.0,
            };
            Vector3::new(x, y, self.height_partial(u, m, n))
        }))
    }

    /// Closed form `Gamma^k_ij = z_k d_i z_j / Delta`.
    fn christoffel(&self, u: ParamPoint) -> Result<Christoffel, SurfaceError> {
        if !self.domain.contains(u) {
            return Err(SurfaceError::OutOfDomain { u1: u.u1, u2: u.u2 });
        }
        let (z1, z2) = self.z_fields(u);
        let z = [z1, z2];
        let dz = self.z_gradient(u);
        let det = 1.0 + z1 * z1 + z2 * z2;
        let mut out = Christoffel::default();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out.gamma[k][i][j] = z[k] * dz[i][j] / det;
                }
            }
        }
        Ok(out)
    }
}

impl GraphPatch {
    /// Metric `[[1 + z1^2, z1 z2], [z1 z2, 1 + z2^2]]` straight from the z fields.
    pub fn metric_from_z(&self, u: ParamPoint) -> [[f64; 2]; 2] {
        let (z1, z2) = self.z_fields(u);
        [[1.0 + z1 * z1, z1 * z2], [z1 * z2, 1.0 + z2 * z2]]
    }

    /// Normal `(z1, z2, 1) / V` straight from the z fields.
    pub fn normal_from_z(&self, u: ParamPoint) -> Vector3<f64> {
        let (z1, z2) = self.z_fields(u);
        Vector3::new(z1, z2, 1.0) / (1.0 + z1 * z1 + z2 * z2).sqrt()
    }

    #[cfg(test)]
    pub(crate) fn check_forms(&self, u: ParamPoint) -> Result<f64, SurfaceError> {
        let f = crate::surface::forms_from_jet(&self.jet(u, 2)?, u)?;
        let g = self.metric_from_z(u);
        Ok((f.g11 - g[0][0]).abs().max((f.g12 - g[0][1]).abs()).max((f.g22 - g[1][1]).abs())
            + (f.normal - self.normal_from_z(u)).norm())
    }
}

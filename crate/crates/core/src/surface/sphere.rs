use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;

use super::{Domain, Interval, Jet, ParamPoint, SurfaceError, SurfacePatch};

/// Ambient axis through the coordinate poles of a [`SpherePatch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarAxis {
    X1,
    X2,
    #[default]
    X3,
}

impl PolarAxis {
    /// Cyclic relabelling of the local frame, so orientation is preserved.
    fn place(self, p: Vector3<f64>) -> Vector3<f64> {
        match self {
            PolarAxis::X3 => p,
            PolarAxis::X1 => Vector3::new(p.z, p.x, p.y),
            PolarAxis::X2 => Vector3::new(p.y, p.z, p.x),
        }
    }
}

/// Sphere of a given radius centred at the origin in colatitude/longitude
/// coordinates `(theta, phi)`; `S = R (sin theta cos phi, sin theta sin phi, cos theta)`
/// with the poles on `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePatch {
    radius: f64,
    axis: PolarAxis,
    pole_margin: f64,
}

impl SpherePatch {
    pub fn new(radius: f64) -> Result<Self, SurfaceError> {
        Self::with_axis(radius, PolarAxis::X3)
    }

    pub fn with_axis(radius: f64, axis: PolarAxis) -> Result<Self, SurfaceError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SurfaceError::InvalidParameter(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self { radius, axis, pole_margin: 1e-3 })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn axis(&self) -> PolarAxis {
        self.axis
    }

    /// Parameter point of an ambient direction (need not be unit length).
    pub fn param_of(&self, x: Vector3<f64>) -> ParamPoint {
        let local = match self.axis {
            PolarAxis::X3 => x,
            PolarAxis::X1 => Vector3::new(x.y, x.z, x.x),
            PolarAxis::X2 => Vector3::new(x.z, x.x, x.y),
        };
        let theta = (local.z / local.norm()).clamp(-1.0, 1.0).acos();
        ParamPoint::new(theta, local.y.atan2(local.x).rem_euclid(TAU))
    }
}

impl SurfacePatch for SpherePatch {
    fn domain(&self) -> Domain {
        Domain::new(
            Interval::closed(self.pole_margin, PI - self.pole_margin),
            Interval::periodic(0.0, TAU),
        )
    }

    fn max_order(&self) -> usize {
        3
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        let (theta, phi) = (u.u1, u.u2);
        let r = self.radius;
        Ok(Jet::from_partials(order, |m, n| {
            let st = (theta + m as f64 * FRAC_PI_2).sin();
            let ct = (theta + m as f64 * FRAC_PI_2).cos();
            let cp = (phi + n as f64 * FRAC_PI_2).cos();
            let sp = (phi + n as f64 * FRAC_PI_2).sin();
            let z = if n == 0 { ct } else { 0.0 };
            self.axis.place(Vector3::new(st * cp, st * sp, z) * r)
        }))
    }
}

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::Vector3;

use super::{Domain, Interval, Jet, ParamPoint, SurfaceError, SurfacePatch};
use crate::planar::PlanarCurve;

/// Round cylinder about the `x3` axis, `S(phi, z) = (R cos phi, R sin phi, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundCylinderPatch {
    radius: f64,
    z_lo: f64,
    z_hi: f64,
}

impl RoundCylinderPatch {
    pub fn new(radius: f64) -> Result<Self, SurfaceError> {
        Self::with_height(radius, -10.0, 10.0)
    }

    pub fn with_height(radius: f64, z_lo: f64, z_hi: f64) -> Result<Self, SurfaceError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SurfaceError::InvalidParameter(format!("cylinder radius must be positive, got {radius}")));
        }
        if !(z_lo < z_hi) {
            return Err(SurfaceError::InvalidParameter(format!("empty height range [{z_lo}, {z_hi}]")));
        }
        Ok(Self { radius, z_lo, z_hi })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl SurfacePatch for RoundCylinderPatch {
    fn domain(&self) -> Domain {
        Domain::angular(self.z_lo, self.z_hi)
    }

    fn max_order(&self) -> usize {
        3
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        let r = self.radius;
        Ok(Jet::from_partials(order, |m, n| match n {
            0 => {
                let a = u.u1 + m as f64 * FRAC_PI_2;
                Vector3::new(r * a.cos(), r * a.sin(), if m == 0 { u.u2 } else { 0.0 })
            }
            1 if m == 0 => Vector3::z(),
            _ => Vector3::zeros(),
        }))
    }
}

/// Cylinder over a closed planar profile, `S(t, z) = (c(t), z)`. The profile
/// must be counterclockwise so the normal points outward.
#[derive(Debug, Clone)]
pub struct EllipticCylinderPatch {
    profile: Arc<dyn PlanarCurve>,
    z_lo: f64,
    z_hi: f64,
}

impl EllipticCylinderPatch {
    pub fn new(profile: Arc<dyn PlanarCurve>) -> Result<Self, SurfaceError> {
        Self::with_height(profile, -10.0, 10.0)
    }

    pub fn with_height(profile: Arc<dyn PlanarCurve>, z_lo: f64, z_hi: f64) -> Result<Self, SurfaceError> {
        if profile.period().is_none() {
            return Err(SurfaceError::InvalidParameter("cylinder profile must be closed".into()));
        }
        if !(z_lo < z_hi) {
            return Err(SurfaceError::InvalidParameter(format!("empty height range [{z_lo}, {z_hi}]")));
        }
        Ok(Self { profile, z_lo, z_hi })
    }

    pub fn profile(&self) -> &Arc<dyn PlanarCurve> {
        &self.profile
    }
}

impl SurfacePatch for EllipticCylinderPatch {
    fn domain(&self) -> Domain {
        let period = self.profile.period().unwrap_or(1.0);
        Domain::new(Interval::periodic(0.0, period), Interval::closed(self.z_lo, self.z_hi))
    }

    fn max_order(&self) -> usize {
        self.profile.max_order().min(3)
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        let mut profile = [nalgebra::Vector2::zeros(); 4];
        for (k, slot) in profile.iter_mut().enumerate().take(order + 1) {
            *slot = self.profile.derivative(u.u1, k).ok_or(SurfaceError::OrderUnavailable {
                requested: k,
                available: self.profile.max_order(),
            })?;
        }
        Ok(Jet::from_partials(order, |m, n| match n {
            0 => Vector3::new(profile[m].x, profile[m].y, if m == 0 { u.u2 } else { 0.0 }),
            1 if m == 0 => Vector3::z(),
            _ => Vector3::zeros(),
        }))
    }
}

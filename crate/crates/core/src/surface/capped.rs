use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::Vector3;

use super::{Domain, Jet, ParamPoint, ProjectionChart, SurfaceError, SurfacePatch};

/// Round cylinder `x3 >= 0` of radius `R` about the `x3` axis, closed below by
/// the hemisphere of the same radius centred at the origin.
///
/// Coordinates `(phi, w)`: `w >= 0` is the height on the tube, `w < 0` is
/// arc length `R psi` down the cap, so the parametrization is `C^1` with
/// Lipschitz derivatives and the second partials jump across `w = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CappedCylinderPatch {
    radius: f64,
    w_hi: f64,
}

const POLE_MARGIN: f64 = 0.05;

fn tube_partial(r: f64, u: ParamPoint, m: usize, n: usize) -> Vector3<f64> {
    match n {
        0 => {
            let a = u.u1 + m as f64 * FRAC_PI_2;
            Vector3::new(r * a.cos(), r * a.sin(), if m == 0 { u.u2 } else { 0.0 })
        }
        1 if m == 0 => Vector3::z(),
        _ => Vector3::zeros(),
    }
}

/// Partials of `R (cos psi cos phi, cos psi sin phi, sin psi)`, `psi = w / R`.
fn cap_partial(r: f64, u: ParamPoint, m: usize, n: usize) -> Vector3<f64> {
    let psi = u.u2 / r;
    let scale = r * r.powi(-(n as i32));
    let cp = (psi + n as f64 * FRAC_PI_2).cos();
    let sp = (psi + n as f64 * FRAC_PI_2).sin();
    let a = u.u1 + m as f64 * FRAC_PI_2;
    let z = if m == 0 { sp } else { 0.0 };
    Vector3::new(cp * a.cos(), cp * a.sin(), z) * scale
}

impl CappedCylinderPatch {
    pub fn new(radius: f64) -> Result<Self, SurfaceError> {
        Self::with_height(radius, 4.0)
    }

    pub fn with_height(radius: f64, w_hi: f64) -> Result<Self, SurfaceError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SurfaceError::InvalidParameter(format!("cap radius must be positive, got {radius}")));
        }
        if !(w_hi > 0.0) {
            return Err(SurfaceError::InvalidParameter(format!("tube height must be positive, got {w_hi}")));
        }
        Ok(Self { radius, w_hi })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn w_lo(&self) -> f64 {
        self.radius * (-FRAC_PI_2 + POLE_MARGIN)
    }

    fn cap_w_hi(&self) -> f64 {
        self.radius * (FRAC_PI_2 - POLE_MARGIN)
    }
}

impl SurfacePatch for CappedCylinderPatch {
    fn domain(&self) -> Domain {
        Domain::angular(self.w_lo(), self.w_hi)
    }

    fn max_order(&self) -> usize {
        3
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        let r = self.radius;
        Ok(if u.u2 >= 0.0 {
            Jet::from_partials(order, |m, n| tube_partial(r, u, m, n))
        } else {
            Jet::from_partials(order, |m, n| cap_partial(r, u, m, n))
        })
    }

    fn projection_charts(&self) -> Vec<ProjectionChart> {
        let tube = SmoothChart { radius: self.radius, kind: ChartKind::Tube, domain: Domain::angular(self.w_lo(), self.w_hi) };
        let cap = SmoothChart { radius: self.radius, kind: ChartKind::Cap, domain: Domain::angular(self.w_lo(), self.cap_w_hi()) };
        vec![
            ProjectionChart { chart: Arc::new(tube), valid: Domain::angular(0.0, self.w_hi) },
            ProjectionChart { chart: Arc::new(cap), valid: Domain::angular(self.w_lo(), 0.0) },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ChartKind {
    Tube,
    Cap,
}

/// One smooth piece of the capped cylinder continued past the seam.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SmoothChart {
    radius: f64,
    kind: ChartKind,
    domain: Domain,
}

impl SurfacePatch for SmoothChart {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn max_order(&self) -> usize {
        3
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        let r = self.radius;
        Ok(match self.kind {
            ChartKind::Tube => Jet::from_partials(order, |m, n| tube_partial(r, u, m, n)),
            ChartKind::Cap => Jet::from_partials(order, |m, n| cap_partial(r, u, m, n)),
        })
    }
}

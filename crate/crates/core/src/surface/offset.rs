use std::sync::Arc;

use nalgebra::Vector3;

use super::{Domain, Jet, ParamPoint, ProjectionChart, SurfaceError, SurfacePatch};

/// Normal offset `S + r n` of a base patch, in the base's parameters.
///
/// Partials come from the product and quotient rules applied to
/// `N = d1 S x d2 S` and `n = N / |N|`, so one order of the base is consumed.
#[derive(Debug, Clone)]
pub struct OffsetPatch {
    base: Arc<dyn SurfacePatch>,
    r: f64,
}

/// Constant-distance surface at distance `r >= 0` outside `base`.
pub fn offset_surface(base: Arc<dyn SurfacePatch>, r: f64) -> Result<OffsetPatch, SurfaceError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(SurfaceError::InvalidParameter(format!("offset distance must be non-negative, got {r}")));
    }
    if base.max_order() < 1 {
        return Err(SurfaceError::OrderUnavailable { requested: 1, available: base.max_order() });
    }
    Ok(OffsetPatch { base, r })
}

impl OffsetPatch {
    pub fn base(&self) -> &Arc<dyn SurfacePatch> {
        &self.base
    }

    pub fn distance(&self) -> f64 {
        self.r
    }
}

/// Unit normal and its parameter partials through `order` (at most 2).
fn normal_jet(b: &Jet, u: ParamPoint, order: usize) -> Result<(Vector3<f64>, [Vector3<f64>; 2], [[Vector3<f64>; 2]; 2]), SurfaceError> {
    let s1 = b.d1[0];
    let s2 = b.d1[1];
    let nn = s1.cross(&s2);
    let len2 = nn.norm_squared();
    if !(len2 > 0.0) || !len2.is_finite() {
        return Err(SurfaceError::Degenerate { u1: u.u1, u2: u.u2, det: len2 });
    }
    let w = len2.powf(-0.5);
    let z = Vector3::zeros();
    let mut dn = [z; 2];
    let mut ddn = [[z; 2]; 2];
    if order == 0 {
        return Ok((nn * w, dn, ddn));
    }
    let dnn: [Vector3<f64>; 2] = [0, 1].map(|i| b.d2[0][i].cross(&s2) + s1.cross(&b.d2[1][i]));
    let dw: [f64; 2] = [0, 1].map(|i| -w * w * w * nn.dot(&dnn[i]));
    for i in 0..2 {
        dn[i] = dnn[i] * w + nn * dw[i];
    }
    if order >= 2 {
        for i in 0..2 {
            for j in 0..2 {
                let ddnn = b.d3[0][i][j].cross(&s2)
                    + b.d2[0][i].cross(&b.d2[1][j])
                    + b.d2[0][j].cross(&b.d2[1][i])
                    + s1.cross(&b.d3[1][i][j]);
                let ddw = 3.0 * w.powi(5) * nn.dot(&dnn[i]) * nn.dot(&dnn[j])
                    - w * w * w * (dnn[i].dot(&dnn[j]) + nn.dot(&ddnn));
                ddn[i][j] = ddnn * w + dnn[i] * dw[j] + dnn[j] * dw[i] + nn * ddw;
            }
        }
    }
    Ok((nn * w, dn, ddn))
}

impl SurfacePatch for OffsetPatch {
    fn domain(&self) -> Domain {
        self.base.domain()
    }

    fn max_order(&self) -> usize {
        self.base.max_order().saturating_sub(1).min(2)
    }

    fn jet_unchecked(&self, u: ParamPoint, order: usize) -> Result<Jet, SurfaceError> {
        let b = self.base.jet_unchecked(u, order + 1)?;
        let (n, dn, ddn) = normal_jet(&b, u, order)?;
        let r = self.r;
        let mut jet = b;
        jet.order = order;
        jet.point = b.point + n * r;
        for i in 0..2 {
            jet.d1[i] = if order >= 1 { b.d1[i] + dn[i] * r } else { Vector3::zeros() };
            for j in 0..2 {
                jet.d2[i][j] = if order >= 2 { b.d2[i][j] + ddn[i][j] * r } else { Vector3::zeros() };
                jet.d3[i][j] = [Vector3::zeros(); 2];
            }
        }
        Ok(jet)
    }

    fn projection_charts(&self) -> Vec<ProjectionChart> {
        self.base
            .projection_charts()
            .into_iter()
            .map(|c| ProjectionChart {
                chart: Arc::new(OffsetPatch { base: c.chart, r: self.r }),
                valid: c.valid,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{
        derivative_consistency, principal_curvatures, GraphPatch, RoundCylinderPatch, SpherePatch,
    };
    use approx::assert_relative_eq;

    #[test]
    fn unit_sphere_offset_by_one_is_radius_two() {
        let s = offset_surface(Arc::new(SpherePatch::new(1.0).unwrap()), 1.0).unwrap();
        let big = SpherePatch::new(2.0).unwrap();
        for u in s.domain().grid(9, 9) {
            assert!((s.eval(u).unwrap() - big.eval(u).unwrap()).norm() <= 1e-12);
        }
    }

    #[test]
    fn plane_offset_is_translate() {
        let p = offset_surface(Arc::new(GraphPatch::quadric(0.0, 0.0).unwrap()), 0.7).unwrap();
        let x = p.eval(ParamPoint::new(0.3, -0.2)).unwrap();
        assert_eq!(x, Vector3::new(0.3, -0.2, 0.7));
    }

    #[test]
    fn graph_offset_curvature_law_at_origin() {
        let p = offset_surface(Arc::new(GraphPatch::quadric(1.0, 2.0).unwrap()), 0.5).unwrap();
        let pc = principal_curvatures(&p, ParamPoint::ORIGIN).unwrap();
        assert_relative_eq!(pc.k1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(pc.k2, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn offset_partials_are_consistent() {
        let g = offset_surface(Arc::new(GraphPatch::quadric(1.0, 2.0).unwrap()), 0.5).unwrap();
        assert!(derivative_consistency(&g, ParamPoint::new(0.2, -0.3)).unwrap() < 1e-6);
        let c = offset_surface(Arc::new(RoundCylinderPatch::new(1.0).unwrap()), 2.0).unwrap();
        assert!(derivative_consistency(&c, ParamPoint::new(1.0, 0.3)).unwrap() < 1e-6);
        let s = offset_surface(Arc::new(SpherePatch::new(1.0).unwrap()), 0.25).unwrap();
        assert!(derivative_consistency(&s, ParamPoint::new(1.0, 0.3)).unwrap() < 1e-6);
    }

    #[test]
    fn offset_of_offset_is_offset_of_sum() {
        let base: Arc<dyn SurfacePatch> = Arc::new(GraphPatch::quadric(1.0, 2.0).unwrap());
        let once: Arc<dyn SurfacePatch> = Arc::new(offset_surface(base.clone(), 0.3).unwrap());
        let twice = offset_surface(once, 0.4).unwrap();
        let direct = offset_surface(base, 0.7).unwrap();
        for u in twice.domain().grid(7, 7) {
            assert!((twice.eval(u).unwrap() - direct.eval(u).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn negative_distance_rejected() {
        assert!(offset_surface(Arc::new(SpherePatch::new(1.0).unwrap()), -0.1).is_err());
    }
}

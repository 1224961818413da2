//! Small numerical kernels shared by the geometry modules: finite-difference
//! weights on arbitrary nodes, Richardson extrapolation with observed-order
//! estimation, composite Gauss-Legendre quadrature, golden-section search and
//! bisection.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("scales must be positive and strictly decreasing")]
    BadScales,
    #[error("scales must shrink by a constant ratio to fit a convergence order")]
    NonGeometricScales,
    #[error("sequence is not monotone; refusing to extrapolate")]
    NonMonotone,
    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

/// Fornberg's recursion for finite-difference weights.
///
/// Returns `w[k][j]`, the weight of node `j` in the approximation of the
/// `k`-th derivative at `z`, for `k = 0..=max_order`.
pub fn fd_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivative of uniformly sampled data with the 5-point
/// central stencil. `f` holds samples at `t0 - 2h, t0 - h, t0, t0 + h, t0 + 2h`.
pub fn central5(f: [f64; 5], h: f64) -> (f64, f64) {
    let d1 = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
    let d2 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
    (d1, d2)
}

/// Result of extrapolating a sequence of measurements to scale zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    /// Observed convergence order from the three finest samples.
    /// `f64::INFINITY` when the samples agree to rounding.
    pub order: f64,
}

/// Richardson extrapolation of `values[i]` measured at `scales[i]`.
///
/// The limit is formed from the two finest samples under the assumed
/// leading error `C * scale^assumed_order`; the order actually observed in
/// the data is estimated from the three finest samples and returned
/// alongside. Sequences whose successive differences change sign are
/// rejected.
pub fn richardson(
    scales: &[f64],
    values: &[f64],
    assumed_order: f64,
) -> Result<Extrapolation, NumericsError> {
    let n = scales.len();
    if n < 3 || values.len() != n {
        return Err(NumericsError::TooFewSamples {
            needed: 3,
            got: n.min(values.len()),
        });
    }
    if scales.iter().any(|s| !(*s > 0.0))
        || scales.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(NumericsError::BadScales);
    }
    let ratio = scales[n - 2] / scales[n - 1];
    if scales
        .windows(2)
        .any(|w| ((w[0] / w[1]) / ratio - 1.0).abs() > 1e-9)
    {
        return Err(NumericsError::NonGeometricScales);
    }

    let magnitude = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e-13 * magnitude.max(1e-300);
    let diffs: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    let significant: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > floor).collect();
    if significant.windows(2).any(|w| w[0].signum() != w[1].signum()) {
        return Err(NumericsError::NonMonotone);
    }

    let coarse = diffs[n - 3];
    let fine = diffs[n - 2];
    let order = if fine.abs() <= floor {
        f64::INFINITY
    } else {
        (coarse / fine).ln() / ratio.ln()
    };
    let last = values[n - 1];
    let value = last + (last - values[n - 2]) / (ratio.powf(assumed_order) - 1.0);
    Ok(Extrapolation { value, order })
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre rule on `panels` equal sub-intervals.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            acc += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += acc * half;
    }
    total
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection for a root of `f` on `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, NumericsError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericsError::NoBracket { lo, hi });
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fd_weights_reproduce_central_stencil() {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fd_weights(0.0, &nodes, 2);
        let expect1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let expect2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for j in 0..5 {
            assert_relative_eq!(w[1][j], expect1[j], epsilon = 1e-14);
            assert_relative_eq!(w[2][j], expect2[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn fd_weights_exact_on_quartics_with_uneven_nodes() {
        let nodes = [0.1, 0.35, 0.4, 0.9, 1.3];
        let f = |x: f64| 3.0 * x.powi(4) - x.powi(3) + 2.0 * x - 1.0;
        let z = 0.5;
        let w = fd_weights(z, &nodes, 2);
        let d1: f64 = nodes.iter().zip(&w[1]).map(|(x, c)| c * f(*x)).sum();
        let d2: f64 = nodes.iter().zip(&w[2]).map(|(x, c)| c * f(*x)).sum();
        assert_relative_eq!(d1, 12.0 * z.powi(3) - 3.0 * z * z + 2.0, epsilon = 1e-10);
        assert_relative_eq!(d2, 36.0 * z * z - 6.0 * z, epsilon = 1e-9);
    }

    #[test]
    fn richardson_recovers_quadratic_limit_and_order() {
        let scales = [0.1, 0.05, 0.025];
        let values: Vec<f64> = scales.iter().map(|s| -2.0 + 7.0 * s * s).collect();
        let e = richardson(&scales, &values, 2.0).unwrap();
        assert_relative_eq!(e.value, -2.0, epsilon = 1e-13);
        assert_relative_eq!(e.order, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn richardson_constant_sequence_has_infinite_order() {
        let e = richardson(&[0.1, 0.05, 0.025], &[0.0, 0.0, 0.0], 2.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.order.is_infinite());
    }

    #[test]
    fn richardson_rejects_oscillation_and_bad_ladders() {
        assert_eq!(
            richardson(&[0.1, 0.05, 0.025], &[1.0, 0.5, 0.9], 2.0),
            Err(NumericsError::NonMonotone)
        );
        assert_eq!(
            richardson(&[0.1, 0.2, 0.025], &[1.0, 0.5, 0.2], 2.0),
            Err(NumericsError::BadScales)
        );
        assert_eq!(
            richardson(&[0.1, 0.05, 0.01], &[1.0, 0.5, 0.2], 2.0),
            Err(NumericsError::NonGeometricScales)
        );
        assert!(matches!(
            richardson(&[0.1, 0.05], &[1.0, 0.5], 2.0),
            Err(NumericsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn gauss_legendre_integrates_smooth_functions() {
        let v = gauss_legendre(f64::sin, 0.0, std::f64::consts::PI, 4);
        assert_relative_eq!(v, 2.0, epsilon = 1e-14);
        let p = gauss_legendre(|x| x.powi(15), 0.0, 1.0, 1);
        assert_relative_eq!(p, 1.0 / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn golden_and_bisect() {
        let x = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2.0_f64.sqrt(), epsilon = 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 1.0, 1e-10).is_err());
    }
}

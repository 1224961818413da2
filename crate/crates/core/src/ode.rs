//! Dormand-Prince 5(4) with local extrapolation, FSAL reuse and error control
//! per unit step.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError<E> {
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: E },
}

/// Integrator counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integrator state for `y' = f(t, y)` in `N` dimensions.
///
/// A step of size `h` is accepted when `max_i |err_i| / (1 + |y_i|) <= tol * h`.
pub struct Dopri5<const N: usize, F> {
    f: F,
    tol: f64,
    t: f64,
    y: [f64; N],
    k1: Option<[f64; N]>,
    h: f64,
    pub stats: OdeStats,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, ks: &[[f64; N]], coef: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (k, c) in ks.iter().zip(coef) {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

impl<const N: usize, E, F> Dopri5<N, F>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    pub fn new(f: F, t0: f64, y0: [f64; N], tol: f64) -> Result<Self, OdeError<E>> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(OdeError::BadTolerance(tol));
        }
        Ok(Self { f, tol, t: t0, y: y0, k1: None, h: 0.01, stats: OdeStats::default() })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> [f64; N] {
        self.y
    }

    fn eval(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N], OdeError<E>> {
        self.stats.evaluations += 1;
        (self.f)(t, y).map_err(|source| OdeError::Rhs { t, source })
    }

    /// Advances exactly to `t_target >= time()`.
    pub fn advance_to(&mut self, t_target: f64) -> Result<[f64; N], OdeError<E>> {
        let h_min = |t: f64| 1e-12 * (1.0 + t.abs());
        while self.t < t_target {
            let k1 = match self.k1 {
                Some(k) => k,
                None => {
                    let y = self.y;
                    let k = self.eval(self.t, &y)?;
                    self.k1 = Some(k);
                    k
                }
            };
            let remaining = t_target - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };

            let mut ks = [[0.0; N]; 7];
            ks[0] = k1;
            let mut rhs_failure = None;
            for s in 1..7 {
                let ys = axpy(&self.y, h, &ks[..s], &A[s][..s]);
                match self.eval(self.t + C[s] * h, &ys) {
                    Ok(k) => ks[s] = k,
                    Err(e) => {
                        rhs_failure = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = rhs_failure {
                self.stats.rejected += 1;
                if h * 0.5 < h_min(self.t) {
                    return Err(e);
                }
                self.h = h * 0.5;
                continue;
            }
            let y_new = axpy(&self.y, h, &ks[..6], &A[6][..6]);
            let mut err = 0.0_f64;
            for i in 0..N {
                let e: f64 = (0..7).map(|s| E[s] * ks[s][i]).sum::<f64>() * h;
                err = err.max(e.abs() / (1.0 + self.y[i].abs().max(y_new[i].abs())));
            }
            let allowed = self.tol * h;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * (allowed / err).powf(0.25)).clamp(0.2, 5.0) };
            if err <= allowed && err.is_finite() {
                self.stats.accepted += 1;
                self.t = if last { t_target } else { self.t + h };
                self.y = y_new;
                self.k1 = Some(ks[6]);
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.stats.rejected += 1;
                let next = h * factor.min(0.9);
                if next < h_min(self.t) {
                    return Err(OdeError::StepUnderflow { t: self.t, h: next });
                }
                self.h = next;
            }
        }
        Ok(self.y)
    }
}

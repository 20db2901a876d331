//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Error-controlled integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-10, max_steps: 10_000_000 }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let ch = c * h;
        for i in 0..N {
            out[i] += ch * k[i];
        }
    }
    out
}

impl Integrator {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { atol: tol, rtol: tol, ..Self::default() }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1 ≥ t0`. `h` carries the step
    /// size between calls; pass `0.0` to let the integrator pick one.
    pub fn integrate<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        h: &mut f64,
    ) -> Result<[f64; N], OdeError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(y0);
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        if !(*h > 0.0) {
            *h = self.initial_step(&f, t, &y, &k1).min(span);
        }
        let mut last_err = 1e-4f64;
        let mut steps = 0usize;
        while t < t1 {
            steps += 1;
            if steps > self.max_steps {
                return Err(OdeError::TooManySteps(self.max_steps));
            }
            let remaining = t1 - t;
            let mut hs = h.min(remaining);
            let finishing = hs >= remaining;
            if finishing {
                hs = remaining;
            }
            if hs < 1e-14 * t.abs().max(1.0) && !finishing {
                return Err(OdeError::StepSizeUnderflow { t, h: hs });
            }
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + hs, &y_new);
            let mut err = 0.0;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                if y_new.iter().all(|v| v.is_finite()) {
                    *h = hs * 0.1;
                    continue;
                }
                return Err(OdeError::NonFinite(t));
            }
            if err <= 1.0 {
                // PI controller (Gustafsson) on accepted steps.
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
                let fac = fac.clamp(0.2, 5.0);
                t = if finishing { t1 } else { t + hs };
                y = y_new;
                k1 = k7;
                last_err = err.max(1e-4);
                if !finishing || hs >= *h {
                    *h = hs * fac;
                }
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                *h = hs * fac;
            }
        }
        Ok(y)
    }

    fn initial_step<const N: usize, F>(&self, f: &F, t: f64, y: &[f64; N], k1: &[f64; N]) -> f64
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let norm = |v: &[f64; N]| {
            let s: f64 = (0..N)
                .map(|i| {
                    let sc = self.atol + self.rtol * y[i].abs();
                    (v[i] / sc).powi(2)
                })
                .sum();
            (s / N as f64).sqrt()
        };
        let d0 = norm(y);
        let d1 = norm(k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(y, h0, &[(1.0, k1)]);
        let k2 = f(t + h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = k2[i] - k1[i];
        }
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}

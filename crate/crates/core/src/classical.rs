//! Classical dynamics in the symmetric-dissipation frame:
//!
//! ```text
//! dx̃/ds = p̃ − κx̃
//! dp̃/ds = −x̃ − κp̃ − β̃ sin(x̃ + ξ_d sin(ν̃_d s))
//! ```
//!
//! Poincaré sections are taken at `s ≡ 0 (mod 2π/ν̃_d)`.

use crate::ode::{Integrator, OdeError};
use crate::params::SymmetricFrame;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Mat2 = [[f64; 2]; 2];

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Lyapunov exponent above which an orbit is classified as chaotic.
pub const CHAOS_THRESHOLD: f64 = 0.01;
/// Minimum number of periods used for the chaos classification.
pub const CHAOS_HORIZON: usize = 1000;
/// Samples per drive period when tracking the relative angle.
pub const WINDING_SAMPLES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian of the return map minus identity is singular (det = {0:e})")]
    SingularJacobian(f64),
    #[error("winding number is ambiguous: {0} laps")]
    AmbiguousWinding(f64),
    #[error("trajectory escaped beyond radius {radius} after {periods} periods")]
    Escaped { radius: f64, periods: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State2 {
    pub x: f64,
    pub p: f64,
}

impl State2 {
    pub const fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.p)
    }

    pub fn dist(&self, other: &State2) -> f64 {
        (self.x - other.x).hypot(self.p - other.p)
    }

    fn neg(self) -> Self {
        Self::new(-self.x, -self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalState {
    pub state: State2,
    pub tangent: Mat2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    Symmetric,
    PairedPartner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub n: usize,
    pub points: Vec<State2>,
    /// Laps around the harmonic orbit, when a harmonic reference was found.
    pub winding_m: Option<i64>,
    pub multipliers: [Complex64; 2],
    pub symmetry: Symmetry,
    pub residual: f64,
    /// Smallest `d | n` with `𝒫^d(z) = z`; a genuine n-orbit has `minimal_period == n`.
    pub minimal_period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitClass {
    Regular,
    Chaotic,
    Escaped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitOrbit {
    pub seed: State2,
    pub iterates: Vec<State2>,
    pub lyapunov_estimate: f64,
    pub classification: OrbitClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 50, max_halvings: 8 }
    }
}

/// Converged fixed point of `𝒫ⁿ` with its monodromy matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub point: State2,
    pub residual: f64,
    pub jacobian: Mat2,
    pub iterations: usize,
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Eigenvalues of a real 2×2 matrix.
pub fn eigenvalues2(a: &Mat2) -> [Complex64; 2] {
    let half_tr = 0.5 * (a[0][0] + a[1][1]);
    let disc = half_tr * half_tr - det2(a);
    if disc >= 0.0 {
        let s = disc.sqrt();
        [Complex64::new(half_tr + s, 0.0), Complex64::new(half_tr - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half_tr, s), Complex64::new(half_tr, -s)]
    }
}

/// The driven, damped pendulum-oscillator in the symmetric frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSystem {
    pub frame: SymmetricFrame,
    pub integrator: Integrator,
    pub newton: NewtonSettings,
    /// Escape radius for κ = 0, and lower bound of the dissipative one.
    pub escape_radius: f64,
}

impl ClassicalSystem {
    pub fn new(frame: SymmetricFrame) -> Self {
        Self {
            frame,
            integrator: Integrator::default(),
            newton: NewtonSettings::default(),
            escape_radius: 50.0,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.integrator = Integrator::with_tolerance(tol);
        self
    }

    pub fn period(&self) -> f64 {
        self.frame.period()
    }

    /// `max(10·β̃/κ, escape_radius)` for κ > 0, `escape_radius` otherwise.
    pub fn escape_bound(&self) -> f64 {
        let f = &self.frame;
        if f.kappa > 0.0 {
            (10.0 * f.beta_tilde / f.kappa).max(self.escape_radius)
        } else {
            self.escape_radius
        }
    }

    #[inline]
    pub fn field(&self, s: f64, x: f64, p: f64) -> [f64; 2] {
        let f = &self.frame;
        let phase = x + f.xi_d * (f.nu_d_tilde * s).sin();
        [p - f.kappa * x, -x - f.kappa * p - f.beta_tilde * phase.sin()]
    }

    pub fn flow(&self, start: State2, s0: f64, s1: f64) -> Result<State2, ClassicalError> {
        check_order(s0, s1)?;
        let mut h = 0.0;
        let y = self.integrator.integrate(
            |s, y: &[f64; 2]| self.field(s, y[0], y[1]),
            s0,
            s1,
            [start.x, start.p],
            &mut h,
        )?;
        Ok(State2::new(y[0], y[1]))
    }

    pub fn poincare(&self, start: State2) -> Result<State2, ClassicalError> {
        self.flow(start, 0.0, self.period())
    }

    pub fn poincare_n(&self, start: State2, n: usize) -> Result<State2, ClassicalError> {
        let mut z = start;
        for _ in 0..n {
            z = self.poincare(z)?;
        }
        Ok(z)
    }

    pub fn variational_flow(&self, start: State2, s0: f64, s1: f64) -> Result<VariationalState, ClassicalError> {
        check_order(s0, s1)?;
        let f = self.frame;
        let rhs = |s: f64, y: &[f64; 6]| {
            let phase = y[0] + f.xi_d * (f.nu_d_tilde * s).sin();
            let (sn, cs) = phase.sin_cos();
            let j10 = -1.0 - f.beta_tilde * cs;
            [
                y[1] - f.kappa * y[0],
                -y[0] - f.kappa * y[1] - f.beta_tilde * sn,
                -f.kappa * y[2] + y[4],
                -f.kappa * y[3] + y[5],
                j10 * y[2] - f.kappa * y[4],
                j10 * y[3] - f.kappa * y[5],
            ]
        };
        let mut h = 0.0;
        let y = self.integrator.integrate(rhs, s0, s1, [start.x, start.p, 1.0, 0.0, 0.0, 1.0], &mut h)?;
        Ok(VariationalState {
            state: State2::new(y[0], y[1]),
            tangent: [[y[2], y[3]], [y[4], y[5]]],
        })
    }

    /// `𝒫ⁿ(z)` together with `∇𝒫ⁿ(z)`.
    pub fn map_with_jacobian(&self, start: State2, n: usize) -> Result<(State2, Mat2), ClassicalError> {
        let mut z = start;
        let mut jac = IDENTITY;
        for _ in 0..n {
            let v = self.variational_flow(z, 0.0, self.period())?;
            z = v.state;
            jac = mat_mul(&v.tangent, &jac);
        }
        Ok((z, jac))
    }

    /// Damped Newton iteration on `𝒫ⁿ(z) − z`.
    pub fn newton_periodic(&self, guess: State2, n: usize) -> Result<NewtonOutcome, ClassicalError> {
        if n == 0 {
            return Err(ClassicalError::InvalidArgument("orbit period n must be >= 1".into()));
        }
        let cfg = self.newton;
        let diverged = 10.0 * self.escape_bound();
        let mut z = guess;
        let (mut img, mut jac) = self.map_with_jacobian(z, n)?;
        let mut res = img.dist(&z);
        for iter in 0..=cfg.max_iter {
            if res <= cfg.tol {
                return Ok(NewtonOutcome { point: z, residual: res, jacobian: jac, iterations: iter });
            }
            if iter == cfg.max_iter || z.norm() > diverged {
                break;
            }
            let a = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
            let det = det2(&a);
            let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            if det.abs() <= 1e-14 * scale.max(1.0).powi(2) {
                return Err(ClassicalError::SingularJacobian(det));
            }
            let gx = img.x - z.x;
            let gp = img.p - z.p;
            let dx = -(a[1][1] * gx - a[0][1] * gp) / det;
            let dp = -(-a[1][0] * gx + a[0][0] * gp) / det;
            let mut t = 1.0;
            let mut fallback = None;
            let mut accepted = None;
            for _ in 0..=cfg.max_halvings {
                let trial = State2::new(z.x + t * dx, z.p + t * dp);
                if let Ok((ti, tj)) = self.map_with_jacobian(trial, n) {
                    let tr = ti.dist(&trial);
                    if tr < res {
                        accepted = Some((trial, ti, tj, tr));
                        break;
                    }
                    fallback.get_or_insert((trial, ti, tj, tr));
                }
                t *= 0.5;
            }
            match accepted.or(fallback) {
                Some((trial, ti, tj, tr)) => {
                    z = trial;
                    img = ti;
                    jac = tj;
                    res = tr;
                }
                None => break,
            }
        }
        Err(ClassicalError::NoConvergence { iterations: cfg.max_iter, residual: res })
    }

    /// Locates an n-orbit near `guess`, fills its multipliers and symmetry class,
    /// and its winding number around the harmonic orbit found from the origin.
    pub fn find_periodic_orbit(&self, guess: State2, n: usize) -> Result<PeriodicOrbit, ClassicalError> {
        let mut orbit = self.orbit_from_newton(self.newton_periodic(guess, n)?, n)?;
        if n >= 2 && orbit.minimal_period == n {
            if let Ok(h) = self.newton_periodic(State2::default(), 1) {
                let harmonic = self.orbit_from_newton(h, 1)?;
                orbit.winding_m = self.winding_number(&orbit, &harmonic).ok();
            }
        }
        Ok(orbit)
    }

    fn orbit_from_newton(&self, out: NewtonOutcome, n: usize) -> Result<PeriodicOrbit, ClassicalError> {
        let mut points = Vec::with_capacity(n);
        let mut z = out.point;
        for _ in 0..n {
            points.push(z);
            z = self.poincare(z)?;
        }
        let minimal_period = (1..=n)
            .find(|d| n % d == 0 && (*d == n || points[*d].dist(&points[0]) <= 1e-6))
            .unwrap_or(n);
        let mut orbit = PeriodicOrbit {
            n,
            points,
            winding_m: None,
            multipliers: eigenvalues2(&out.jacobian),
            symmetry: Symmetry::PairedPartner,
            residual: out.residual,
            minimal_period,
        };
        orbit.symmetry = self.symmetry_check(&orbit)?;
        Ok(orbit)
    }

    /// Section points of the image of `orbit` under `(x, p, s) → (−x, −p, s + π/ν̃)`.
    pub fn partner_points(&self, orbit: &PeriodicOrbit) -> Result<Vec<State2>, ClassicalError> {
        let half = 0.5 * self.period();
        orbit.points.iter().map(|p| Ok(self.flow(*p, 0.0, half)?.neg())).collect()
    }

    /// Symmetric when the sign-flipped, half-period-shifted orbit is the orbit itself.
    pub fn symmetry_check(&self, orbit: &PeriodicOrbit) -> Result<Symmetry, ClassicalError> {
        if orbit.n % 2 == 0 {
            return Ok(Symmetry::PairedPartner);
        }
        let partner = self.partner_points(orbit)?;
        let same = partner.iter().all(|q| orbit.points.iter().any(|p| p.dist(q) <= 1e-6));
        Ok(if same { Symmetry::Symmetric } else { Symmetry::PairedPartner })
    }

    /// Samples a trajectory `samples_per_period` times per drive period,
    /// starting at section phase 0. The first sample is `start`.
    pub fn trajectory(
        &self,
        start: State2,
        periods: usize,
        samples_per_period: usize,
    ) -> Result<Vec<State2>, ClassicalError> {
        let total = periods * samples_per_period;
        let dt = self.period() / samples_per_period as f64;
        let mut out = Vec::with_capacity(total + 1);
        out.push(start);
        let mut z = [start.x, start.p];
        let mut h = 0.0;
        for k in 0..total {
            let s0 = (k % samples_per_period) as f64 * dt;
            let s1 = s0 + dt;
            z = self
                .integrator
                .integrate(|s, y: &[f64; 2]| self.field(s, y[0], y[1]), s0, s1, z, &mut h)?;
            out.push(State2::new(z[0], z[1]));
        }
        Ok(out)
    }

    /// Clockwise laps of `orbit − harmonic` over `2πn/ν̃_d`.
    pub fn winding_number(&self, orbit: &PeriodicOrbit, harmonic: &PeriodicOrbit) -> Result<i64, ClassicalError> {
        if harmonic.n != 1 {
            return Err(ClassicalError::InvalidArgument("harmonic reference must have n = 1".into()));
        }
        if orbit.n < 2 {
            return Err(ClassicalError::InvalidArgument("winding requires an orbit with n >= 2".into()));
        }
        let a = self.trajectory(orbit.points[0], orbit.n, WINDING_SAMPLES)?;
        let b = self.trajectory(harmonic.points[0], orbit.n, WINDING_SAMPLES)?;
        let mut total = 0.0;
        let mut prev: Option<f64> = None;
        for (za, zb) in a.iter().zip(&b) {
            let (dx, dp) = (za.x - zb.x, za.p - zb.p);
            if dx.hypot(dp) < 1e-9 {
                return Err(ClassicalError::AmbiguousWinding(f64::NAN));
            }
            let ang = dp.atan2(dx);
            if let Some(pa) = prev {
                let mut d = ang - pa;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                total += d;
            }
            prev = Some(ang);
        }
        let laps = -total / (2.0 * PI);
        let m = laps.round();
        if (laps - m).abs() > 0.05 {
            return Err(ClassicalError::AmbiguousWinding(laps));
        }
        Ok(m as i64)
    }

    /// Finite-time largest Lyapunov exponent per unit s.
    pub fn lyapunov_exponent(&self, seed: State2, horizon_periods: usize) -> Result<f64, ClassicalError> {
        if horizon_periods < 100 {
            return Err(ClassicalError::InvalidArgument("horizon must be at least 100 periods".into()));
        }
        let mut tracker = LyapunovTracker::new(seed);
        for k in 0..horizon_periods {
            tracker.step(self)?;
            if tracker.z.norm() > self.escape_bound() {
                return Err(ClassicalError::Escaped { radius: self.escape_bound(), periods: k + 1 });
            }
        }
        Ok(tracker.exponent(self.period()))
    }

    /// Iterates `𝒫` from every seed, classifying each orbit. The Lyapunov
    /// estimate always uses at least [`CHAOS_HORIZON`] periods.
    pub fn phase_portrait(&self, seeds: &[State2], iterations: usize) -> Vec<PortraitOrbit> {
        seeds.iter().map(|&s| self.portrait_orbit(s, iterations)).collect()
    }

    pub fn portrait_orbit(&self, seed: State2, iterations: usize) -> PortraitOrbit {
        let bound = self.escape_bound();
        let mut tracker = LyapunovTracker::new(seed);
        let mut iterates = Vec::with_capacity(iterations);
        let horizon = iterations.max(CHAOS_HORIZON);
        let mut escaped = seed.norm() > bound;
        for k in 0..horizon {
            if escaped {
                break;
            }
            if tracker.step(self).is_err() {
                escaped = true;
                break;
            }
            if tracker.z.norm() > bound {
                escaped = true;
            }
            if k < iterations {
                iterates.push(tracker.z);
            }
        }
        let lyapunov_estimate = tracker.exponent(self.period());
        let classification = if escaped {
            OrbitClass::Escaped
        } else if lyapunov_estimate > CHAOS_THRESHOLD {
            OrbitClass::Chaotic
        } else {
            OrbitClass::Regular
        };
        PortraitOrbit { seed, iterates, lyapunov_estimate, classification }
    }
}

struct LyapunovTracker {
    z: State2,
    v: [f64; 2],
    log_sum: f64,
    periods: usize,
}

impl LyapunovTracker {
    fn new(seed: State2) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self { z: seed, v: [r, r], log_sum: 0.0, periods: 0 }
    }

    fn step(&mut self, sys: &ClassicalSystem) -> Result<(), ClassicalError> {
        let w = sys.variational_flow(self.z, 0.0, sys.period())?;
        let t = &w.tangent;
        let nv = [t[0][0] * self.v[0] + t[0][1] * self.v[1], t[1][0] * self.v[0] + t[1][1] * self.v[1]];
        let norm = nv[0].hypot(nv[1]);
        self.log_sum += norm.ln();
        self.v = [nv[0] / norm, nv[1] / norm];
        self.z = w.state;
        self.periods += 1;
        Ok(())
    }

    fn exponent(&self, period: f64) -> f64 {
        if self.periods == 0 {
            return 0.0;
        }
        self.log_sum / (self.periods as f64 * period)
    }
}

fn check_order(s0: f64, s1: f64) -> Result<(), ClassicalError> {
    if s1 < s0 {
        return Err(ClassicalError::InvalidArgument(format!("s1 = {s1} precedes s0 = {s0}")));
    }
    Ok(())
}

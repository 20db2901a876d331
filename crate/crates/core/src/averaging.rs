//! First-order averaged model of an `(n:m)` resonance.
//!
//! In the frame rotating at `(m/n)ν̃_d` with `ū = R sinθ`, `v̄ = R cosθ`:
//!
//! ```text
//! Ṙ = −κR + β̃ h(θ, R, ξ_d)
//! θ̇ =  δ  + β̃ g(θ, R, ξ_d) / R
//! ```
//!
//! `g` and `h` are Bessel series whose only angular harmonics are multiples of
//! `L = (1+r)n`, which makes the field invariant under rotation by `2π/L`.

use crate::params::{ResonanceLabel, SymmetricFrame};
use crate::special::{bessel_j, BesselTable};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Angular samples per fundamental sector in the root scan.
pub const THETA_GRID: usize = 1440;
/// Radius below which the polar parameterization is bypassed.
pub const SMALL_R: f64 = 1e-8;
const MARGINAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("marginally stable equilibrium at R = {r_star}, theta = {theta_star} (eigenvalues {eigenvalues:?})")]
    MarginalStability { theta_star: f64, r_star: f64, eigenvalues: [Complex64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedModel {
    pub label: ResonanceLabel,
    pub beta_tilde: f64,
    pub kappa: f64,
    pub xi_d: f64,
    /// Bessel orders kept beyond the argument; the dropped tail is below 1e-14.
    pub bessel_cutoff: usize,
}

impl AveragedModel {
    pub fn new(label: ResonanceLabel, beta_tilde: f64, kappa: f64, xi_d: f64) -> Self {
        Self { label, beta_tilde, kappa, xi_d, bessel_cutoff: 40 }
    }

    pub fn from_frame(label: ResonanceLabel, frame: &SymmetricFrame) -> Self {
        Self::new(label, frame.beta_tilde, frame.kappa, frame.xi_d)
    }

    pub fn with_xi(&self, xi_d: f64) -> Self {
        Self { xi_d, ..*self }
    }

    pub fn legs(&self) -> u32 {
        self.label.legs()
    }

    /// Width of the fundamental angular sector, `2π/L`.
    pub fn sector(&self) -> f64 {
        2.0 * PI / self.legs() as f64
    }

    pub fn series(&self, r: f64) -> RadialSeries {
        RadialSeries::new(r, self.xi_d, self.label, self.bessel_cutoff)
    }

    pub fn g(&self, theta: f64, r: f64) -> f64 {
        self.series(r).g(theta)
    }

    pub fn h(&self, theta: f64, r: f64) -> f64 {
        self.series(r).h(theta)
    }

    /// `(Ṙ, θ̇)`; requires `r > 0`.
    pub fn polar_rates(&self, theta: f64, r: f64, delta: f64) -> (f64, f64) {
        let s = self.series(r);
        (-self.kappa * r + self.beta_tilde * s.h(theta), delta + self.beta_tilde * s.g(theta) / r)
    }

    /// Time averages `⟨sinφ sinζ⟩`, `⟨cosφ sinζ⟩` and the stability integrals
    /// `⟨sinφ cosφ cosζ⟩`, `⟨sin²φ cosζ⟩`, `⟨cos²φ cosζ⟩` at a Cartesian point,
    /// with `φ = mt`, `ζ = R sin(θ + mt) + ξ_d sin(nt)`.
    pub fn period_averages(&self, u: f64, v: f64) -> PeriodAverages {
        let (m, n) = (self.label.m as f64, self.label.n as f64);
        let xi = self.xi_d;
        let eval = |t: f64| {
            let (sp, cp) = (m * t).sin_cos();
            let zeta = u * cp + v * sp + xi * (n * t).sin();
            let (sz, cz) = zeta.sin_cos();
            [sp * sz, cp * sz, sp * cp * cz, sp * sp * cz, cp * cp * cz]
        };
        let a = periodic_trapezoid(eval, 1e-13);
        PeriodAverages { sin_phi_sin: a[0], cos_phi_sin: a[1], sc_cos: a[2], ss_cos: a[3], cc_cos: a[4] }
    }

    pub fn stability_matrix(&self, u: f64, v: f64, delta: f64) -> [[f64; 2]; 2] {
        let a = self.period_averages(u, v);
        let (b, k) = (self.beta_tilde, self.kappa);
        [[-k + b * a.sc_cos, delta + b * a.ss_cos], [-delta - b * a.cc_cos, -k - b * a.sc_cos]]
    }
}

/// Bessel coefficients `c_k = 𝒥_{1+Lk}(R) 𝒥_{−(1+r)km}(ξ_d)` at a fixed radius.
#[derive(Debug, Clone)]
pub struct RadialSeries {
    legs: f64,
    terms: Vec<(f64, f64)>,
}

impl RadialSeries {
    pub fn new(r: f64, xi_d: f64, label: ResonanceLabel, cutoff: usize) -> Self {
        let l = label.legs() as i64;
        let step = ((1 + label.r) * label.m) as i64;
        let tr = BesselTable::new(r.abs().ceil() as usize + cutoff, r);
        let tx = BesselTable::new(xi_d.abs().ceil() as usize + cutoff, xi_d);
        let kmax = (tr.max_order() as i64 + 1) / l + 1;
        let terms = (-kmax..=kmax)
            .filter_map(|k| {
                let c = tr.get(1 + l * k) * tx.get(-step * k);
                (c != 0.0).then_some((k as f64, c))
            })
            .collect();
        Self { legs: l as f64, terms }
    }

    pub fn g(&self, theta: f64) -> f64 {
        self.terms.iter().map(|&(k, c)| c * (self.legs * k * theta).cos()).sum()
    }

    pub fn h(&self, theta: f64) -> f64 {
        -self.terms.iter().map(|&(k, c)| c * (self.legs * k * theta).sin()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodAverages {
    pub sin_phi_sin: f64,
    pub cos_phi_sin: f64,
    pub sc_cos: f64,
    pub ss_cos: f64,
    pub cc_cos: f64,
}

/// Mean of a smooth 2π-periodic function on `[0, 2π)`, doubling the uniform
/// grid until successive estimates agree.
pub fn periodic_trapezoid<const N: usize>(f: impl Fn(f64) -> [f64; N], tol: f64) -> [f64; N] {
    let mean = |pts: usize, offset: bool| {
        let h = 2.0 * PI / pts as f64;
        let shift = if offset { 0.5 * h } else { 0.0 };
        let mut acc = [0.0; N];
        for j in 0..pts {
            let v = f(shift + j as f64 * h);
            for i in 0..N {
                acc[i] += v[i];
            }
        }
        acc
    };
    let mut pts = 128;
    let mut sum = mean(pts, false);
    let mut est = sum.map(|s| s / pts as f64);
    while pts < 1 << 18 {
        let mid = mean(pts, true);
        for i in 0..N {
            sum[i] += mid[i];
        }
        pts *= 2;
        let next = sum.map(|s| s / pts as f64);
        let done = (0..N).all(|i| (next[i] - est[i]).abs() <= tol * (1.0 + next[i].abs()));
        est = next;
        if done {
            break;
        }
    }
    est
}

pub fn g_func(theta: f64, r: f64, xi_d: f64, label: ResonanceLabel, cutoff: usize) -> f64 {
    RadialSeries::new(r, xi_d, label, cutoff).g(theta)
}

pub fn h_func(theta: f64, r: f64, xi_d: f64, label: ResonanceLabel, cutoff: usize) -> f64 {
    RadialSeries::new(r, xi_d, label, cutoff).h(theta)
}

/// Cartesian averaged field `(dū, dv̄)`.
pub fn averaged_vector_field(u: f64, v: f64, delta: f64, model: &AveragedModel) -> (f64, f64) {
    let r = u.hypot(v);
    let b = model.beta_tilde;
    if r < SMALL_R {
        let a0 = model.period_averages(0.0, 0.0);
        let j = model.stability_matrix(0.0, 0.0, delta);
        return (
            b * a0.sin_phi_sin + j[0][0] * u + j[0][1] * v,
            -b * a0.cos_phi_sin + j[1][0] * u + j[1][1] * v,
        );
    }
    let (sn, cs) = (u / r, v / r);
    let theta = u.atan2(v);
    let s = model.series(r);
    let (g, h) = (s.g(theta), s.h(theta));
    (
        delta * v - model.kappa * u + b * (h * sn + g * cs),
        -delta * u - model.kappa * v + b * (h * cs - g * sn),
    )
}

/// Equilibria on the circle of radius `r_star` within the fundamental sector
/// `[0, 2π/L)`, as `(θ*, δ)` pairs. When `Ṙ` vanishes identically on the
/// circle a single representative at `θ = 0` is returned.
pub fn equilibria_at_radius(r_star: f64, model: &AveragedModel) -> Vec<(f64, f64)> {
    if r_star <= 0.0 {
        return Vec::new();
    }
    let s = model.series(r_star);
    let rdot = |th: f64| -model.kappa * r_star + model.beta_tilde * s.h(th);
    let delta_of = |th: f64| -model.beta_tilde * s.g(th) / r_star;
    let sector = model.sector();
    let dth = sector / THETA_GRID as f64;
    let vals: Vec<f64> = (0..=THETA_GRID).map(|j| rdot(j as f64 * dth)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= 1e-14 * (model.kappa * r_star).max(model.beta_tilde).max(1e-300) || scale == 0.0 {
        return vec![(0.0, delta_of(0.0))];
    }
    let mut roots = Vec::new();
    for j in 0..THETA_GRID {
        let (fa, fb) = (vals[j], vals[j + 1]);
        let a = j as f64 * dth;
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect_root(&rdot, a, a + dth, fa));
        }
    }
    roots
        .into_iter()
        .map(|th| {
            let th = if th >= sector { th - sector } else { th };
            (th, delta_of(th))
        })
        .collect()
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 || (fm.abs() <= 1e-12 && b - a < 1e-13) || b - a <= 2.0 * f64::EPSILON * mid.abs().max(1.0) {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Node,
    Saddle,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Node => "node",
            Stability::Saddle => "saddle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub theta_star: f64,
    pub r_star: f64,
    pub delta: f64,
    pub stability: Stability,
    pub eigenvalues: [Complex64; 2],
}

impl Equilibrium {
    pub fn u(&self) -> f64 {
        self.r_star * self.theta_star.sin()
    }

    pub fn v(&self) -> f64 {
        self.r_star * self.theta_star.cos()
    }
}

/// Linear stability from the period-averaged Jacobian. Positive determinant
/// means node (centres when κ = 0), negative determinant saddle.
pub fn classify_stability(
    theta_star: f64,
    r_star: f64,
    delta: f64,
    model: &AveragedModel,
) -> Result<Equilibrium, AveragingError> {
    let (u, v) = (r_star * theta_star.sin(), r_star * theta_star.cos());
    let a = model.stability_matrix(u, v, delta);
    let eigenvalues = crate::classical::eigenvalues2(&a);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let real_near_zero = eigenvalues.iter().any(|e| e.im == 0.0 && e.re.abs() <= MARGINAL_TOL);
    if real_near_zero {
        return Err(AveragingError::MarginalStability { theta_star, r_star, eigenvalues });
    }
    let stability = if det > 0.0 { Stability::Node } else { Stability::Saddle };
    Ok(Equilibrium { theta_star, r_star, delta, stability, eigenvalues })
}

pub fn origin_equilibrium(delta: f64, model: &AveragedModel) -> Result<Equilibrium, AveragingError> {
    classify_stability(0.0, 0.0, delta, model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub branch: usize,
    pub r_star: f64,
    pub theta_star: f64,
    pub delta: f64,
    /// `None` at a marginally stable point.
    pub stability: Option<Stability>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fold {
    pub branch: usize,
    pub r_star: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationScan {
    pub r_grid: Vec<f64>,
    pub points: Vec<BranchPoint>,
    pub branch_count: usize,
    /// Stability changes along a branch, ordered by radius.
    pub folds: Vec<Fold>,
    /// `(δ_min, δ_max)` over stable nodes away from the origin.
    pub extremal_deltas: Option<(f64, f64)>,
    pub legs: u32,
}

impl BifurcationScan {
    pub fn branch(&self, id: usize) -> impl Iterator<Item = &BranchPoint> {
        self.points.iter().filter(move |p| p.branch == id)
    }

    /// Nodes minus saddles at detuning `delta`, counting the origin as a node
    /// and every sector equilibrium `L` times. `None` when a crossing falls on
    /// a segment with a stability change.
    pub fn index_at(&self, delta: f64) -> Option<i64> {
        let mut balance = 0i64;
        for id in 0..self.branch_count {
            let pts: Vec<_> = self.branch(id).collect();
            for w in pts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if (a.delta - delta) * (b.delta - delta) > 0.0 {
                    continue;
                }
                if a.delta == delta && b.delta != delta {
                    continue;
                }
                match (a.stability, b.stability) {
                    (Some(Stability::Node), Some(Stability::Node)) => balance += 1,
                    (Some(Stability::Saddle), Some(Stability::Saddle)) => balance -= 1,
                    _ => return None,
                }
            }
        }
        Some(1 + self.legs as i64 * balance)
    }
}

/// Root scan over an increasing radius grid, with branches linked by
/// angular proximity between neighbouring radii.
pub fn bifurcation_scan(model: &AveragedModel, r_grid: &[f64]) -> BifurcationScan {
    let sector = model.sector();
    let max_jump = sector / 16.0;
    let mut points = Vec::new();
    let mut previous: Vec<(usize, f64)> = Vec::new();
    let mut branch_count = 0;
    for &r in r_grid.iter().filter(|r| **r > 0.0) {
        let roots = equilibria_at_radius(r, model);
        // Closest pairs are linked first so that a root born next to an
        // existing branch cannot take over its continuation.
        let mut pairs: Vec<(f64, usize, usize)> = roots
            .iter()
            .enumerate()
            .flat_map(|(i, &(theta, _))| {
                previous.iter().enumerate().map(move |(j, &(_, th))| (circular_distance(theta, th, sector), i, j))
            })
            .filter(|p| p.0 < max_jump)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut link: Vec<Option<usize>> = vec![None; roots.len()];
        let mut taken = vec![false; previous.len()];
        for (_, i, j) in pairs {
            if link[i].is_none() && !taken[j] {
                link[i] = Some(j);
                taken[j] = true;
            }
        }
        let mut current = Vec::with_capacity(roots.len());
        for ((theta, delta), linked) in roots.into_iter().zip(link) {
            let branch = match linked {
                Some(j) => previous[j].0,
                None => {
                    branch_count += 1;
                    branch_count - 1
                }
            };
            let stability = classify_stability(theta, r, delta, model).ok().map(|e| e.stability);
            points.push(BranchPoint { branch, r_star: r, theta_star: theta, delta, stability });
            current.push((branch, theta));
        }
        previous = current;
    }
    points.sort_by(|a, b| a.branch.cmp(&b.branch).then(a.r_star.total_cmp(&b.r_star)));

    let mut folds = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.branch != b.branch {
            continue;
        }
        if let (Some(sa), Some(sb)) = (a.stability, b.stability) {
            if sa != sb {
                folds.push(Fold { branch: a.branch, r_star: 0.5 * (a.r_star + b.r_star), delta: 0.5 * (a.delta + b.delta) });
            }
        }
    }
    folds.sort_by(|a, b| a.r_star.total_cmp(&b.r_star));

    let extremal_deltas = points
        .iter()
        .filter(|p| p.stability == Some(Stability::Node))
        .fold(None, |acc: Option<(f64, f64)>, p| match acc {
            None => Some((p.delta, p.delta)),
            Some((lo, hi)) => Some((lo.min(p.delta), hi.max(p.delta))),
        });

    BifurcationScan { r_grid: r_grid.to_vec(), points, branch_count, folds, extremal_deltas, legs: model.legs() }
}

fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    pub xi_d: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub nu_d_min: f64,
    pub nu_d_max: f64,
}

/// Drive frequency in the original time unit for detuning `delta`.
pub fn nu_d_from_delta(delta: f64, label: ResonanceLabel, kappa: f64) -> f64 {
    let nu_tilde = label.n as f64 / label.m as f64 * (1.0 - delta);
    nu_tilde / (1.0 + kappa * kappa).sqrt()
}

/// Stable-node detuning range per drive amplitude; `None` where no stable
/// node exists on the radius grid.
pub fn resonance_region(model: &AveragedModel, xi_grid: &[f64], r_grid: &[f64]) -> Vec<(f64, Option<RegionRow>)> {
    xi_grid
        .iter()
        .map(|&xi| (xi, region_at(model, xi, r_grid)))
        .collect()
}

pub fn region_at(model: &AveragedModel, xi_d: f64, r_grid: &[f64]) -> Option<RegionRow> {
    let m = model.with_xi(xi_d);
    let (lo, hi) = bifurcation_scan(&m, r_grid).extremal_deltas?;
    Some(RegionRow {
        xi_d,
        delta_min: lo,
        delta_max: hi,
        nu_d_min: nu_d_from_delta(hi, m.label, m.kappa),
        nu_d_max: nu_d_from_delta(lo, m.label, m.kappa),
    })
}

/// `Δ_AC = (β̃/2)(𝒥₀(ξ_d) − 1)`.
pub fn ac_stark(xi_d: f64, beta_tilde: f64) -> f64 {
    0.5 * beta_tilde * (bessel_j(0, xi_d) - 1.0)
}

/// `ν_d = (n/m)(1 + (β/2)𝒥₀(ξ_d))`.
pub fn resonant_drive_frequency(label: ResonanceLabel, beta: f64, xi_d: f64) -> f64 {
    label.n as f64 / label.m as f64 * (1.0 + 0.5 * beta * bessel_j(0, xi_d))
}

/// Coherent amplitudes `α_l = i e^{−i(2πl/L + θ*)} R*/2λ` of the `L` cat legs.
pub fn alpha_from_equilibrium(theta_star: f64, r_star: f64, lambda: f64, label: ResonanceLabel) -> Vec<Complex64> {
    let legs = label.legs();
    (0..legs)
        .map(|l| {
            let phase = 2.0 * PI * l as f64 / legs as f64 + theta_star;
            Complex64::i() * Complex64::from_polar(r_star / (2.0 * lambda), -phase)
        })
        .collect()
}

//! Floquet–Markov dissipation: golden-rule rates between Floquet modes and
//! the classical mixture they relax to.

use crate::quantum::{density_from_mixture, FloquetDecomposition};
use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

pub const KERNEL_TOL: f64 = 1e-10;
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("{samples} samples per period cannot resolve harmonics up to m_max = {m_max} (need at least {})", 4 * m_max)]
    InsufficientSampling { samples: usize, m_max: usize },
    #[error("invalid bath: {0}")]
    InvalidBath(String),
    #[error("rate matrix has no kernel: smallest singular value {smallest:e} against norm {norm:e}")]
    NoKernel { smallest: f64, norm: f64 },
    #[error("singular value decomposition failed: {0}")]
    Svd(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub j_const: f64,
    /// Bath temperature in units of `ħω_p/k_B`.
    pub t_bath: f64,
    pub m_max: usize,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self { j_const: 1.0, t_bath: 0.0, m_max: 5 }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<(), MarkovError> {
        if !(self.j_const > 0.0 && self.j_const.is_finite()) {
            return Err(MarkovError::InvalidBath(format!("j_const must be positive, got {}", self.j_const)));
        }
        if !(self.t_bath >= 0.0 && self.t_bath.is_finite()) {
            return Err(MarkovError::InvalidBath(format!("t_bath must be non-negative, got {}", self.t_bath)));
        }
        if self.m_max == 0 {
            return Err(MarkovError::InvalidBath("m_max must be at least 1".into()));
        }
        Ok(())
    }

    /// Bose–Einstein occupation at frequency `w`; zero for a cold bath.
    pub fn n_th(&self, w: f64) -> f64 {
        if self.t_bath == 0.0 || w <= 0.0 {
            0.0
        } else {
            1.0 / (w / self.t_bath).exp_m1()
        }
    }
}

/// Fourier coefficients `P_{rlm}` of `i⟨φ_r(t)|a − a†|φ_l(t)⟩ = Σ_m P_{rlm} e^{imν_d t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionElements {
    pub modes: usize,
    pub m_max: usize,
    /// Flattened `[(r * modes + l) * (2m_max + 1) + (m + m_max)]`.
    pub p_rlm: Vec<c64>,
}

impl TransitionElements {
    fn index(&self, r: usize, l: usize, m: i64) -> usize {
        let width = 2 * self.m_max + 1;
        (r * self.modes + l) * width + (m + self.m_max as i64) as usize
    }

    pub fn get(&self, r: usize, l: usize, m: i64) -> c64 {
        assert!(m.unsigned_abs() as usize <= self.m_max, "harmonic {m} outside ±{}", self.m_max);
        self.p_rlm[self.index(r, l, m)]
    }

    pub fn harmonics(&self) -> std::ops::RangeInclusive<i64> {
        -(self.m_max as i64)..=self.m_max as i64
    }

    /// Largest `|P_{lr,−m} − conj(P_{rlm})|`, zero for a Hermitian coupling.
    pub fn conjugation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.modes {
            for l in 0..self.modes {
                for m in self.harmonics() {
                    worst = worst.max((self.get(l, r, -m) - self.get(r, l, m).conj()).norm());
                }
            }
        }
        worst
    }
}

/// `i⟨φ_r(t_k)|a − a†|φ_l(t_k)⟩` for every stored sample.
pub fn coupling_samples(decomp: &FloquetDecomposition) -> Vec<Mat<c64>> {
    let n = decomp.len();
    let dim = decomp.dim();
    let i = c64::new(0.0, 1.0);
    decomp
        .modes
        .iter()
        .map(|phi| {
            let xphi = Mat::from_fn(dim, n, |k, r| {
                let down = if k + 1 < dim { phi[(k + 1, r)] * ((k + 1) as f64).sqrt() } else { c64::new(0.0, 0.0) };
                let up = if k > 0 { phi[(k - 1, r)] * (k as f64).sqrt() } else { c64::new(0.0, 0.0) };
                i * (down - up)
            });
            let mut out = Mat::<c64>::zeros(n, n);
            matmul(out.as_mut(), Accum::Replace, phi.adjoint(), xphi.as_ref(), c64::new(1.0, 0.0), Par::Seq);
            out
        })
        .collect()
}

pub fn transition_elements(decomp: &FloquetDecomposition, m_max: usize) -> Result<TransitionElements, MarkovError> {
    let nt = decomp.samples();
    if m_max == 0 || nt < 4 * m_max {
        return Err(MarkovError::InsufficientSampling { samples: nt, m_max });
    }
    let n = decomp.len();
    let width = 2 * m_max + 1;
    let samples = coupling_samples(decomp);
    let mut p_rlm = vec![c64::new(0.0, 0.0); n * n * width];
    for (k, a) in samples.iter().enumerate() {
        let phases: Vec<c64> = (0..width)
            .map(|w| {
                let m = w as f64 - m_max as f64;
                c64::cis(-2.0 * PI * m * k as f64 / nt as f64) / nt as f64
            })
            .collect();
        for r in 0..n {
            for l in 0..n {
                let z = a[(r, l)];
                let base = (r * n + l) * width;
                for (w, ph) in phases.iter().enumerate() {
                    p_rlm[base + w] += z * ph;
                }
            }
        }
    }
    Ok(TransitionElements { modes: n, m_max, p_rlm })
}

/// `ε_l − ε_r + mν_d`, the energy released by the jump `l → r` in sideband `m`.
pub fn transition_frequency(quasienergies: &[f64], nu_d: f64, r: usize, l: usize, m: i64) -> f64 {
    quasienergies[l] - quasienergies[r] + m as f64 * nu_d
}

/// Rate matrix `L` with `L_{rl}` the total rate of the jump `l → r`.
///
/// Each sideband `m` contributes `2πΘ(Δ_{rlm})J|P_{l,r,m}|²`, which pairs the
/// emission frequency `Δ_{rlm}` with the Fourier component of `⟨φ_r|X|φ_l⟩`
/// at `e^{−imν_d t}`; thermal occupation adds stimulated emission and absorption.
pub fn golden_rule_rates(
    elems: &TransitionElements,
    decomp: &FloquetDecomposition,
    bath: &BathSpec,
) -> Result<Mat<f64>, MarkovError> {
    bath.validate()?;
    if bath.m_max > elems.m_max {
        return Err(MarkovError::Shape(format!("bath m_max {} exceeds computed harmonics {}", bath.m_max, elems.m_max)));
    }
    let n = elems.modes;
    if decomp.len() < n {
        return Err(MarkovError::Shape(format!("{n} transition modes but only {} quasienergies", decomp.len())));
    }
    let eps = &decomp.quasienergies;
    let nu = decomp.nu_d;
    let gamma = |r: usize, l: usize, m: i64| {
        let d = transition_frequency(eps, nu, r, l, m);
        if d > 0.0 {
            2.0 * PI * bath.j_const * elems.get(l, r, m).norm_sqr()
        } else {
            0.0
        }
    };
    let mmax = bath.m_max as i64;
    Ok(Mat::from_fn(n, n, |r, l| {
        if r == l {
            return 0.0;
        }
        (-mmax..=mmax)
            .map(|m| {
                let g = gamma(r, l, m);
                let d = transition_frequency(eps, nu, r, l, m);
                let nth = bath.n_th(d.abs());
                if nth == 0.0 {
                    g
                } else {
                    g + nth * (g + gamma(l, r, -m))
                }
            })
            .sum()
    }))
}

/// `R = L − diag(Σ_m L_{ml})`, so every column sums to zero.
pub fn rate_matrix(l: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let out_flow: Vec<f64> = (0..n).map(|c| (0..n).filter(|&m| m != c).map(|m| l[(m, c)]).sum()).collect();
    Mat::from_fn(n, n, |r, c| if r == c { -out_flow[c] } else { l[(r, c)] })
}

/// Decay rate `½Σ_m (L_{mr} + L_{ml})` of the coherence `ρ_{rl}`.
pub fn coherence_decay_rate(l: &Mat<f64>, r: usize, c: usize) -> f64 {
    let n = l.nrows();
    0.5 * (0..n).map(|m| l[(m, r)] + l[(m, c)]).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelStatus {
    Unique,
    Inconclusive,
}

impl KernelStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unique => "unique",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub probabilities: Vec<f64>,
    pub entropy: f64,
    pub n_occ: f64,
    pub status: KernelStatus,
    /// Second-smallest singular value of `R`.
    pub kernel_gap: f64,
}

impl SteadyState {
    pub fn from_probabilities(probabilities: Vec<f64>, status: KernelStatus, kernel_gap: f64) -> Self {
        let entropy = shannon_entropy(&probabilities);
        Self { probabilities, entropy, n_occ: entropy.exp(), status, kernel_gap }
    }

    /// Mode indices ordered by decreasing weight.
    pub fn dominant_modes(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probabilities.len()).collect();
        idx.sort_by(|&a, &b| self.probabilities[b].total_cmp(&self.probabilities[a]).then(a.cmp(&b)));
        idx
    }
}

pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

pub fn steady_state(r: &Mat<f64>) -> Result<SteadyState, MarkovError> {
    let n = r.nrows();
    if n == 0 || r.ncols() != n {
        return Err(MarkovError::Shape(format!("rate matrix is {}x{}", r.nrows(), r.ncols())));
    }
    if n == 1 {
        return Ok(SteadyState::from_probabilities(vec![1.0], KernelStatus::Unique, f64::INFINITY));
    }
    let svd = r.svd().map_err(|e| MarkovError::Svd(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let norm = s[order[n - 1]];
    let (smallest, second) = (s[order[0]], s[order[1]]);
    if norm == 0.0 {
        return Ok(SteadyState::from_probabilities(vec![1.0 / n as f64; n], KernelStatus::Inconclusive, 0.0));
    }
    if smallest > KERNEL_TOL * norm {
        return Err(MarkovError::NoKernel { smallest, norm });
    }
    let status = if second < DEGENERACY_TOL * norm { KernelStatus::Inconclusive } else { KernelStatus::Unique };
    let v = svd.V();
    let mut p: Vec<f64> = (0..n).map(|i| v[(i, order[0])]).collect();
    if p.iter().sum::<f64>() < 0.0 {
        p.iter_mut().for_each(|x| *x = -*x);
    }
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(SteadyState::from_probabilities(p, status, second))
}

/// `ρ_∞(τ) = Σ_r p_r |φ_r(τ)⟩⟨φ_r(τ)|` at the stored sample nearest to `τ` (mod `T`).
pub fn asymptotic_state(steady: &SteadyState, decomp: &FloquetDecomposition, tau: f64) -> Result<Mat<c64>, MarkovError> {
    let n = steady.probabilities.len();
    if n > decomp.len() {
        return Err(MarkovError::Shape(format!("{n} probabilities but only {} modes", decomp.len())));
    }
    let k = nearest_sample(decomp, tau);
    let states: Vec<Vec<c64>> = (0..n).map(|r| decomp.mode_at(r, k)).collect();
    Ok(density_from_mixture(&steady.probabilities, &states))
}

fn nearest_sample(decomp: &FloquetDecomposition, tau: f64) -> usize {
    let nt = decomp.samples();
    let period = 2.0 * PI / decomp.nu_d;
    let x = (tau / period).rem_euclid(1.0) * nt as f64;
    (x.round() as usize) % nt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{normalized_from_ratios, NormalizedModel, Quality};
    use crate::quantum::{build_operators, floquet_decompose, one_period_propagator, PropagatorSettings};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model(beta: f64, lambda: f64, xi: f64, nu: f64) -> NormalizedModel {
        let mut m = normalized_from_ratios(beta, 0.5 * lambda.powi(4), nu, 1.0, Quality::Infinite).unwrap();
        m.xi_d = xi;
        m
    }

    fn decompose(m: &NormalizedModel, dim: usize, samples: usize, keep: usize) -> FloquetDecomposition {
        let ops = build_operators(dim, m.lambda).unwrap();
        let set = PropagatorSettings { steps_per_period: 512, samples, max_doublings: 0, ..Default::default() };
        let mut d = floquet_decompose(&one_period_propagator(m, &ops, &set).unwrap(), &ops).unwrap();
        d.retain(keep);
        d
    }

    fn random_rates(rng: &mut StdRng, n: usize) -> Mat<f64> {
        Mat::from_fn(n, n, |r, c| {
            if r == c || rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
    }

    /// RK4 integration of `dp/dt = Rp` from the uniform distribution.
    fn relax(r: &Mat<f64>, t_end: f64, dt: f64) -> Vec<f64> {
        let n = r.nrows();
        let apply = |p: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| r[(i, j)] * p[j]).sum()).collect() };
        let mut p = vec![1.0 / n as f64; n];
        let steps = (t_end / dt).ceil() as usize;
        for _ in 0..steps {
            let k1 = apply(&p);
            let y2: Vec<f64> = (0..n).map(|i| p[i] + 0.5 * dt * k1[i]).collect();
            let k2 = apply(&y2);
            let y3: Vec<f64> = (0..n).map(|i| p[i] + 0.5 * dt * k2[i]).collect();
            let k3 = apply(&y3);
            let y4: Vec<f64> = (0..n).map(|i| p[i] + dt * k3[i]).collect();
            let k4 = apply(&y4);
            for i in 0..n {
                p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        p
    }

    #[test]
    fn harmonic_elements_are_the_fock_ladder() {
        let d = decompose(&model(0.0, 0.2, 1.0, 3.0), 30, 32, 12);
        let e = transition_elements(&d, 5).unwrap();
        // Folded modes carry e^{−ikν_d t}, so each ladder entry sits in one shifted sideband.
        for r in 0..12 {
            for l in 0..12 {
                let total: f64 = e.harmonics().map(|m| e.get(r, l, m).norm_sqr()).sum();
                let want = if r.abs_diff(l) == 1 { r.max(l) as f64 } else { 0.0 };
                assert!((total - want).abs() < 1e-9, "{r} {l} {total}");
                let peak = e.harmonics().map(|m| e.get(r, l, m).norm_sqr()).fold(0.0, f64::max);
                assert!((peak - want).abs() < 1e-9);
            }
        }
        assert!(e.conjugation_defect() < 1e-12);
    }

    #[test]
    fn sampling_guard() {
        let d = decompose(&model(0.0, 0.2, 1.0, 3.0), 20, 16, 5);
        assert!(matches!(transition_elements(&d, 5), Err(MarkovError::InsufficientSampling { samples: 16, m_max: 5 })));
        assert!(transition_elements(&d, 4).is_ok());
    }

    #[test]
    fn parseval_and_alias_free() {
        let m = model(0.4, 0.3, 1.1, 2.2);
        let coarse = decompose(&m, 40, 64, 10);
        let fine = decompose(&m, 40, 128, 10);
        let ec = transition_elements(&coarse, 16).unwrap();
        let ef = transition_elements(&fine, 5).unwrap();
        let samples = coupling_samples(&coarse);
        assert!(ec.conjugation_defect() < 1e-8);
        for r in 0..10 {
            for l in 0..10 {
                let avg: f64 = samples.iter().map(|a| a[(r, l)].norm_sqr()).sum::<f64>() / samples.len() as f64;
                let sum: f64 = ec.harmonics().map(|k| ec.get(r, l, k).norm_sqr()).sum();
                assert!((avg - sum).abs() < 1e-8, "{r} {l} {avg} {sum}");
                for k in ef.harmonics() {
                    assert!((ec.get(r, l, k) - ef.get(r, l, k)).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn harmonic_rates_flow_downwards() {
        let d = decompose(&model(0.0, 0.2, 1.0, 3.0), 30, 32, 12);
        let e = transition_elements(&d, 5).unwrap();
        let l = golden_rule_rates(&e, &d, &BathSpec::default()).unwrap();
        for r in 0..12 {
            for c in 0..12 {
                let want = if c == r + 1 { 2.0 * PI * c as f64 } else { 0.0 };
                assert!((l[(r, c)] - want).abs() < 1e-9, "{r} {c} {}", l[(r, c)]);
            }
        }
        let s = steady_state(&rate_matrix(&l)).unwrap();
        assert_eq!(s.status, KernelStatus::Unique);
        assert!(s.probabilities[0] >= 1.0 - 1e-6);
        assert!((s.n_occ - 1.0).abs() < 1e-6);
    }

    #[test]
    fn thermal_bath_populates_excited_modes() {
        let d = decompose(&model(0.0, 0.2, 1.0, 3.0), 30, 32, 12);
        let e = transition_elements(&d, 5).unwrap();
        let bath = BathSpec { t_bath: 0.5, ..Default::default() };
        let l = golden_rule_rates(&e, &d, &bath).unwrap();
        let nth = 1.0 / (2f64).exp_m1();
        assert!((l[(0, 1)] - 2.0 * PI * (1.0 + nth)).abs() < 1e-9);
        assert!((l[(1, 0)] - 2.0 * PI * nth).abs() < 1e-9);
        let s = steady_state(&rate_matrix(&l)).unwrap();
        // Truncated Bose–Einstein populations ∝ e^{−k/T}.
        let z: f64 = (0..12).map(|k| (-(k as f64) / 0.5).exp()).sum();
        for k in 0..12 {
            assert!((s.probabilities[k] - (-(k as f64) / 0.5).exp() / z).abs() < 1e-9);
        }
    }

    #[test]
    fn two_mode_flow() {
        let l = Mat::from_fn(2, 2, |r, c| if (r, c) == (0, 1) { 1.0 } else { 0.0 });
        let s = steady_state(&rate_matrix(&l)).unwrap();
        assert_eq!(s.probabilities, vec![1.0, 0.0]);
        assert_eq!(s.n_occ, 1.0);
    }

    #[test]
    fn entropy_examples() {
        let s = SteadyState::from_probabilities(vec![1.0 / 3.0; 3], KernelStatus::Unique, 1.0);
        assert!((s.entropy - 3f64.ln()).abs() < 1e-15);
        assert!((s.n_occ - 3.0).abs() < 1e-14);
        let s = SteadyState::from_probabilities(vec![0.0, 1.0, 0.0], KernelStatus::Unique, 1.0);
        assert_eq!(s.n_occ, 1.0);
        assert_eq!(s.dominant_modes()[0], 1);
    }

    #[test]
    fn disconnected_blocks_are_inconclusive() {
        let l = Mat::from_fn(4, 4, |r, c| if r / 2 == c / 2 && r != c { 1.0 + r as f64 } else { 0.0 });
        let s = steady_state(&rate_matrix(&l)).unwrap();
        assert_eq!(s.status, KernelStatus::Inconclusive);
        assert!(s.kernel_gap < 1e-12);
    }

    #[test]
    fn no_kernel_detected() {
        let r = Mat::from_fn(3, 3, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(matches!(steady_state(&r), Err(MarkovError::NoKernel { .. })));
    }

    #[test]
    fn kernel_matches_rate_ode() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in 5..=10 {
            let l = random_rates(&mut rng, n);
            let r = rate_matrix(&l);
            let s = steady_state(&r).unwrap();
            let p = relax(&r, 400.0, 0.01);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for i in 0..n {
                assert!((p[i] - s.probabilities[i]).abs() < 1e-8, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn single_mode_mixture_is_projector() {
        let d = decompose(&model(0.3, 0.3, 1.0, 2.0), 30, 16, 6);
        let s = SteadyState::from_probabilities(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0], KernelStatus::Unique, 1.0);
        let rho = asymptotic_state(&s, &d, 0.2).unwrap();
        let sq = &rho * &rho;
        for i in 0..30 {
            for j in 0..30 {
                assert!((sq[(i, j)] - rho[(i, j)]).norm() < 1e-10);
            }
        }
        let period = 2.0 * PI / 2.0;
        assert_eq!(nearest_sample(&d, period), 0);
        assert_eq!(nearest_sample(&d, -period / 16.0), 15);
    }

    proptest! {
        #[test]
        fn columns_conserve_probability(seed in 0u64..10_000, n in 2usize..12) {
            let mut rng = StdRng::seed_from_u64(seed);
            let r = rate_matrix(&random_rates(&mut rng, n));
            for c in 0..n {
                let sum: f64 = (0..n).map(|i| r[(i, c)]).sum();
                prop_assert!(sum.abs() < 1e-12);
            }
        }

        #[test]
        fn scaling_leaves_steady_state(seed in 0u64..10_000, n in 3usize..9, scale in 1e-3f64..1e3) {
            let mut rng = StdRng::seed_from_u64(seed);
            let l = Mat::from_fn(n, n, |r, c| if r == c { 0.0 } else { 0.05 + rng.random::<f64>() });
            let a = steady_state(&rate_matrix(&l)).unwrap();
            let b = steady_state(&rate_matrix(&(&l * faer::Scale(scale)))).unwrap();
            for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                prop_assert!((x - y).abs() < 1e-10);
            }
            prop_assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(a.probabilities.iter().all(|p| *p >= -1e-12));
            prop_assert!((a.n_occ - a.entropy.exp()).abs() < 1e-12);
        }

        #[test]
        fn coherences_decay(seed in 0u64..10_000, n in 2usize..10) {
            let mut rng = StdRng::seed_from_u64(seed);
            let l = random_rates(&mut rng, n);
            for r in 0..n {
                for c in 0..n {
                    let any = (0..n).any(|m| l[(m, r)] > 0.0 || l[(m, c)] > 0.0);
                    if any {
                        prop_assert!(coherence_decay_rate(&l, r, c) > 0.0);
                    }
                }
            }
        }
    }
}

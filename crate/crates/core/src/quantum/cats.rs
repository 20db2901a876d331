use super::{cdot, cnorm, fold_quasienergy, FloquetDecomposition, FockOperators, QuantumError};
use crate::params::ResonanceLabel;
use faer::c64;
use std::f64::consts::PI;

/// `|𝒞_k(τ)⟩ ∝ Σ_l e^{2iπlk/L} |α₀ e^{2iπl/L} e^{−imν_dτ/n}⟩` with `L = (1+r)n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatStateSpec {
    pub alpha0: c64,
    pub label: ResonanceLabel,
    pub k: u32,
    pub tau: f64,
    pub nu_d: f64,
}

/// Truncated coherent state `e^{−|α|²/2} Σ αⁿ/√n! |n⟩`.
pub fn coherent_state(alpha: c64, dim: usize) -> Vec<c64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = c64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

fn check_truncation(alpha: c64, dim: usize) -> Result<(), QuantumError> {
    let a = alpha.norm();
    let load = a * a + 6.0 * a;
    if load >= dim as f64 {
        return Err(QuantumError::TruncationUnsafe { load, dim });
    }
    Ok(())
}

/// Largest `|α|` with `|α|² + 6|α| < dim`.
fn safe_radius(dim: usize) -> f64 {
    -3.0 + (9.0 + dim as f64).sqrt()
}

pub fn cat_state(spec: &CatStateSpec, ops: &FockOperators) -> Result<Vec<c64>, QuantumError> {
    check_truncation(spec.alpha0, ops.dim)?;
    let legs = spec.label.legs();
    if spec.k >= legs {
        return Err(QuantumError::InvalidArgument(format!("cat index {} outside 0..{legs}", spec.k)));
    }
    let rot = c64::cis(-(spec.label.m as f64) * spec.nu_d * spec.tau / spec.label.n as f64);
    let mut psi = vec![c64::new(0.0, 0.0); ops.dim];
    for l in 0..legs {
        let w = 2.0 * PI * l as f64 / legs as f64;
        let coh = coherent_state(spec.alpha0 * c64::cis(w) * rot, ops.dim);
        let ph = c64::cis(w * spec.k as f64);
        for (p, c) in psi.iter_mut().zip(coh) {
            *p += ph * c;
        }
    }
    let norm = cnorm(&psi);
    if norm < 1e-8 {
        return Err(QuantumError::InvalidArgument("cat component vanishes at this amplitude".into()));
    }
    psi.iter_mut().for_each(|p| *p /= norm);
    Ok(psi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSettings {
    /// Lowest-photon modes considered as cat candidates.
    pub n_keep: usize,
    pub radial_steps: usize,
    pub angular_steps: usize,
    pub min_mean_fidelity: f64,
    /// Minimum distance `2|α|sin(π/L)` between neighbouring legs.
    pub min_leg_distance: f64,
}

impl Default for CatSettings {
    fn default() -> Self {
        Self { n_keep: 60, radial_steps: 48, angular_steps: 24, min_mean_fidelity: 0.5, min_leg_distance: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatFit {
    pub alpha: c64,
    /// Best overlap `|⟨𝒞_k|φ_r(0)⟩|²` for each cat index `k`.
    pub fidelities: Vec<f64>,
    /// Mode index achieving each fidelity.
    pub modes: Vec<usize>,
    pub mean_fidelity: f64,
}

struct CatScorer<'a> {
    candidates: Vec<Vec<c64>>,
    legs: u32,
    dim: usize,
    _decomp: &'a FloquetDecomposition,
}

impl CatScorer<'_> {
    /// Per-cat best fidelity and mode index at amplitude `alpha`.
    fn evaluate(&self, alpha: c64) -> Vec<(f64, usize)> {
        let legs = self.legs as usize;
        let coh: Vec<Vec<c64>> = (0..legs)
            .map(|l| coherent_state(alpha * c64::cis(2.0 * PI * l as f64 / legs as f64), self.dim))
            .collect();
        let leg_overlaps: Vec<Vec<c64>> = coh.iter().map(|c| self.candidates.iter().map(|m| cdot(c, m)).collect()).collect();
        let gram: Vec<Vec<c64>> = coh.iter().map(|a| coh.iter().map(|b| cdot(a, b)).collect()).collect();
        (0..legs)
            .map(|k| {
                let ph: Vec<c64> = (0..legs).map(|l| c64::cis(2.0 * PI * (l * k) as f64 / legs as f64)).collect();
                let mut norm2 = 0.0;
                for l in 0..legs {
                    for j in 0..legs {
                        norm2 += (ph[l].conj() * ph[j] * gram[l][j]).re;
                    }
                }
                if norm2 < 1e-16 {
                    return (0.0, 0);
                }
                let mut best = (0.0, 0);
                for r in 0..self.candidates.len() {
                    let amp = (0..legs).fold(c64::new(0.0, 0.0), |acc, l| acc + ph[l].conj() * leg_overlaps[l][r]);
                    let f = amp.norm_sqr() / norm2;
                    if f > best.0 {
                        best = (f, r);
                    }
                }
                best
            })
            .collect()
    }

    fn score(&self, alpha: c64) -> f64 {
        self.evaluate(alpha).iter().map(|p| p.0).sum()
    }
}

/// Fits the cat amplitude `α₀` to the lowest-photon Floquet modes at `t = 0`.
pub fn cat_fidelity(
    decomp: &FloquetDecomposition,
    label: ResonanceLabel,
    ops: &FockOperators,
    settings: &CatSettings,
) -> Result<CatFit, QuantumError> {
    let keep = settings.n_keep.min(decomp.len());
    let scorer = CatScorer {
        candidates: (0..keep).map(|r| decomp.mode_at(r, 0)).collect(),
        legs: label.legs(),
        dim: ops.dim,
        _decomp: decomp,
    };
    let rmax = safe_radius(ops.dim) * 0.999;
    let sector = 2.0 * PI / label.legs() as f64;
    let rmin = settings.min_leg_distance / (2.0 * (0.5 * sector).sin());
    if rmin >= rmax {
        return Err(QuantumError::TruncationUnsafe { load: rmin * rmin + 6.0 * rmin, dim: ops.dim });
    }
    let mut best = (f64::MIN, c64::new(0.0, 0.0));
    for i in 1..=settings.radial_steps {
        let rad = rmin + (rmax - rmin) * (i - 1) as f64 / (settings.radial_steps - 1).max(1) as f64;
        for j in 0..settings.angular_steps {
            let a = c64::from_polar(rad, sector * j as f64 / settings.angular_steps as f64);
            let s = scorer.score(a);
            if s > best.0 {
                best = (s, a);
            }
        }
    }
    // Compass search on (Re α, Im α).
    let mut step = (rmax - rmin) / settings.radial_steps as f64;
    let (mut f, mut a) = best;
    while step > 1e-9 {
        let mut moved = false;
        for d in [c64::new(step, 0.0), c64::new(-step, 0.0), c64::new(0.0, step), c64::new(0.0, -step)] {
            let trial = a + d;
            if trial.norm() >= rmax || trial.norm() < rmin {
                continue;
            }
            let s = scorer.score(trial);
            if s > f {
                (f, a) = (s, trial);
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let eval = scorer.evaluate(a);
    let fidelities: Vec<f64> = eval.iter().map(|p| p.0).collect();
    let mean_fidelity = fidelities.iter().sum::<f64>() / fidelities.len() as f64;
    if mean_fidelity < settings.min_mean_fidelity {
        return Err(QuantumError::NoCatManifold(mean_fidelity));
    }
    Ok(CatFit { alpha: a, fidelities, modes: eval.iter().map(|p| p.1).collect(), mean_fidelity })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapResult {
    pub gap: f64,
    /// `(cat mode, most coupled excited mode, folded distance)`.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Operator used to rank the excited modes coupled to a cat mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapCoupling {
    /// `a`.
    Lowering,
    /// `a†`.
    Raising,
    /// The bath operator `i(a − a†)`.
    #[default]
    Bath,
}

impl GapCoupling {
    fn apply(self, psi: &[c64]) -> Vec<c64> {
        let n = psi.len();
        let zero = c64::new(0.0, 0.0);
        (0..n)
            .map(|k| {
                let down = if k + 1 < n { psi[k + 1] * ((k + 1) as f64).sqrt() } else { zero };
                let up = if k > 0 { psi[k - 1] * (k as f64).sqrt() } else { zero };
                match self {
                    Self::Lowering => down,
                    Self::Raising => up,
                    Self::Bath => c64::new(0.0, 1.0) * (down - up),
                }
            })
            .collect()
    }
}

/// Quasienergy distance between each cat mode `ψ` and the mode `η` outside
/// the manifold maximizing the period-averaged `|⟨η|O|ψ⟩|²`, folded modulo
/// `fold_period`; the gap is the smallest such distance.
pub fn quasienergy_gap(
    decomp: &FloquetDecomposition,
    cat_modes: &[usize],
    fold_period: f64,
    coupling: GapCoupling,
) -> Result<GapResult, QuantumError> {
    if cat_modes.is_empty() {
        return Err(QuantumError::InvalidArgument("empty cat manifold".into()));
    }
    let nt = decomp.samples();
    let mut pairs = Vec::with_capacity(cat_modes.len());
    for &psi in cat_modes {
        let mut weight = vec![0.0; decomp.len()];
        for k in 0..nt {
            let opsi = coupling.apply(&decomp.mode_at(psi, k));
            let m = &decomp.modes[k];
            for (eta, c) in weight.iter_mut().enumerate() {
                let amp = (0..m.nrows()).fold(c64::new(0.0, 0.0), |acc, i| acc + m[(i, eta)].conj() * opsi[i]);
                *c += amp.norm_sqr() / nt as f64;
            }
        }
        let eta = (0..decomp.len())
            .filter(|e| !cat_modes.contains(e))
            .max_by(|&a, &b| weight[a].total_cmp(&weight[b]))
            .ok_or_else(|| QuantumError::InvalidArgument("no modes outside the cat manifold".into()))?;
        let d = fold_quasienergy(decomp.quasienergies[eta] - decomp.quasienergies[psi], fold_period).abs();
        pairs.push((psi, eta, d));
    }
    let gap = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    Ok(GapResult { gap, pairs })
}

#[cfg(test)]
mod tests {
    use super::super::build_operators;
    use super::*;
    use crate::params::make_resonance;
    use faer::Mat;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn coherent_state_normalized() {
        let c = coherent_state(c64::new(1.2, -0.7), 60);
        assert!((cnorm(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_leg_is_coherent() {
        let ops = build_operators(40, 0.2).unwrap();
        let spec = CatStateSpec { alpha0: c64::new(1.5, 0.5), label: make_resonance(1, 2).unwrap(), k: 0, tau: 0.0, nu_d: 1.0 };
        let mut spec = spec;
        spec.label.r = 0;
        let psi = cat_state(&spec, &ops).unwrap();
        let coh = coherent_state(spec.alpha0, 40);
        assert!((cdot(&psi, &coh).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_sectors_orthogonal() {
        let ops = build_operators(60, 0.2).unwrap();
        let label = make_resonance(3, 1).unwrap();
        let mk = |k| cat_state(&CatStateSpec { alpha0: c64::new(2.0, 0.0), label, k, tau: 0.0, nu_d: 3.0 }, &ops).unwrap();
        let (c0, c1, c2) = (mk(0), mk(1), mk(2));
        assert!(cdot(&c0, &c1).norm() < 1e-10 && cdot(&c1, &c2).norm() < 1e-10);
        // Only Fock levels ≡ 0 (mod 3) populate the k = 0 cat.
        assert!(c0.iter().enumerate().all(|(n, z)| n % 3 == 0 || z.norm() < 1e-12));
        let four = make_resonance(2, 1).unwrap();
        let c = cat_state(&CatStateSpec { alpha0: c64::new(2.0, 0.0), label: four, k: 1, tau: 0.0, nu_d: 2.0 }, &ops).unwrap();
        assert!(c.iter().enumerate().all(|(n, z)| n % 4 == 3 || z.norm() < 1e-12));
    }

    #[test]
    fn truncation_guard() {
        let ops = build_operators(20, 0.2).unwrap();
        let spec = CatStateSpec { alpha0: c64::new(3.0, 0.0), label: make_resonance(3, 1).unwrap(), k: 0, tau: 0.0, nu_d: 3.0 };
        assert!(matches!(cat_state(&spec, &ops), Err(QuantumError::TruncationUnsafe { .. })));
    }

    fn synthetic(states: Vec<Vec<c64>>, nu: f64) -> FloquetDecomposition {
        let dim = states[0].len();
        let n = states.len();
        let m = Mat::from_fn(dim, n, |i, j| states[j][i]);
        FloquetDecomposition {
            nu_d: nu,
            quasienergies: (0..n).map(|r| 0.01 * r as f64).collect(),
            modes: vec![m.clone(), m],
            times: vec![0.0, PI / nu],
            mean_photons: (0..n).map(|r| r as f64).collect(),
            convergence_flag: true,
            degenerate_pairs: 0,
        }
    }

    #[test]
    fn exact_cats_are_recovered() {
        let ops = build_operators(80, 0.2).unwrap();
        let label = make_resonance(3, 1).unwrap();
        let alpha = c64::from_polar(2.7, 0.4);
        let mut states: Vec<Vec<c64>> = (0..3)
            .map(|k| cat_state(&CatStateSpec { alpha0: alpha, label, k, tau: 0.0, nu_d: 3.0 }, &ops).unwrap())
            .collect();
        let mut fock = vec![c64::new(0.0, 0.0); 80];
        fock[79] = c64::new(1.0, 0.0);
        states.push(fock);
        let fit = cat_fidelity(&synthetic(states, 3.0), label, &ops, &CatSettings::default()).unwrap();
        for f in &fit.fidelities {
            assert!((f - 1.0).abs() < 1e-8, "{:?}", fit);
        }
        let mut m = fit.modes.clone();
        m.sort();
        assert_eq!(m, vec![0, 1, 2]);
    }

    #[test]
    fn split_parity_modes_are_not_cats() {
        let ops = build_operators(60, 0.2).unwrap();
        // Equal weight on two neighbouring residue classes caps every cat overlap below 1/2.
        let states = (0..10)
            .map(|k| {
                let mut v = vec![c64::new(0.0, 0.0); 60];
                v[k] = c64::new(FRAC_1_SQRT_2, 0.0);
                v[k + 1] = c64::new(FRAC_1_SQRT_2, 0.0);
                v
            })
            .collect();
        let fit = cat_fidelity(&synthetic(states, 3.0), make_resonance(3, 1).unwrap(), &ops, &CatSettings::default());
        assert!(matches!(fit, Err(QuantumError::NoCatManifold(_))));
    }

    #[test]
    fn gap_picks_most_coupled_mode() {
        let states: Vec<Vec<c64>> = (0..4)
            .map(|k| {
                let mut v = vec![c64::new(0.0, 0.0); 20];
                v[k] = c64::new(1.0, 0.0);
                v
            })
            .collect();
        let mut d = synthetic(states, 3.0);
        d.quasienergies = vec![0.1, 0.35, 1.2, -0.4];
        // a|1⟩ = |0⟩ and a†|1⟩ = √2|2⟩.
        let g = quasienergy_gap(&d, &[1], 1.0, GapCoupling::Lowering).unwrap();
        assert_eq!(g.pairs[0].1, 0);
        assert!((g.gap - 0.25).abs() < 1e-12);
        let g = quasienergy_gap(&d, &[1], 1.0, GapCoupling::Raising).unwrap();
        assert_eq!(g.pairs[0].1, 2);
        assert!((g.gap - 0.15).abs() < 1e-12);
        assert_eq!(quasienergy_gap(&d, &[1], 1.0, GapCoupling::Bath).unwrap().pairs[0].1, 2);
        assert!(quasienergy_gap(&d, &[], 1.0, GapCoupling::Bath).is_err());
    }
}

use super::coherent_state;
use faer::{c64, Mat};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Rectangular grid in `(x, p)`; the complex amplitude is `α = (x + ip)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, nx: n, p_min: -half_width, p_max: half_width, np: n }
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row-major in `x`: `values[ix * ps.len() + ip]`.
    pub values: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.ps.len() + ip]
    }

    /// `∫ f dx dp` by the rectangle rule.
    pub fn integral_dxdp(&self) -> f64 {
        let dx = if self.xs.len() > 1 { self.xs[1] - self.xs[0] } else { 0.0 };
        let dp = if self.ps.len() > 1 { self.ps[1] - self.ps[0] } else { 0.0 };
        self.values.iter().sum::<f64>() * dx * dp
    }

    fn evaluate(spec: &GridSpec, f: impl Fn(c64) -> f64) -> Self {
        let xs = GridSpec::axis(spec.x_min, spec.x_max, spec.nx);
        let ps = GridSpec::axis(spec.p_min, spec.p_max, spec.np);
        let mut values = Vec::with_capacity(xs.len() * ps.len());
        for &x in &xs {
            for &p in &ps {
                values.push(f(c64::new(x, p) * FRAC_1_SQRT_2));
            }
        }
        Self { xs, ps, values }
    }
}

pub fn density_from_state(psi: &[c64]) -> Mat<c64> {
    let n = psi.len();
    Mat::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

pub fn density_from_mixture(weights: &[f64], states: &[Vec<c64>]) -> Mat<c64> {
    let n = states.first().map_or(0, |s| s.len());
    let mut rho = Mat::<c64>::zeros(n, n);
    for (w, s) in weights.iter().zip(states) {
        if *w == 0.0 {
            continue;
        }
        for j in 0..n {
            let cj = s[j].conj() * *w;
            for i in 0..n {
                rho[(i, j)] += s[i] * cj;
            }
        }
    }
    rho
}

/// `Q(α) = ⟨α|ρ|α⟩/π`, a density with respect to `d²α = dx dp/2`.
pub fn husimi_q(rho: &Mat<c64>, spec: &GridSpec) -> PhaseSpaceGrid {
    let n = rho.nrows();
    PhaseSpaceGrid::evaluate(spec, |alpha| {
        let c = coherent_state(alpha, n);
        let mut acc = c64::new(0.0, 0.0);
        for j in 0..n {
            let rc = (0..n).fold(c64::new(0.0, 0.0), |s, i| s + c[i].conj() * rho[(i, j)]);
            acc += rc * c[j];
        }
        acc.re / PI
    })
}

/// `W(α) = (2/π) Tr[ρ D(α) Π D(α)†]`, so that `W(0) = 2/π` for the vacuum,
/// by the Laguerre recursion over Fock matrix elements.
pub fn wigner(rho: &Mat<c64>, spec: &GridSpec) -> PhaseSpaceGrid {
    let n = rho.nrows();
    PhaseSpaceGrid::evaluate(spec, |a| {
        let mut w = vec![c64::new(0.0, 0.0); n];
        w[0] = c64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
        let mut total = rho[(0, 0)].re * w[0].re;
        for k in 1..n {
            w[k] = 2.0 * a * w[k - 1] / (k as f64).sqrt();
            total += 2.0 * (rho[(0, k)] * w[k]).re;
        }
        for m in 1..n {
            let sm = (m as f64).sqrt();
            let mut temp = w[m];
            w[m] = (2.0 * a.conj() * temp - sm * w[m - 1]) / sm;
            total += (rho[(m, m)] * w[m]).re;
            for k in m + 1..n {
                let next = (2.0 * a * w[k - 1] - sm * temp) / (k as f64).sqrt();
                temp = w[k];
                w[k] = next;
                total += 2.0 * (rho[(m, k)] * w[k]).re;
            }
        }
        2.0 * total
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_operators, cat_state, CatStateSpec};
    use super::*;
    use crate::params::make_resonance;
    use faer::Side;

    fn vacuum(n: usize) -> Vec<c64> {
        let mut v = vec![c64::new(0.0, 0.0); n];
        v[0] = c64::new(1.0, 0.0);
        v
    }

    /// `(2/π) Σ_k (−1)^k |⟨k|D(α)†|ψ⟩|²` with `D` from a dense exponential.
    fn brute_wigner(psi: &[c64], alpha: c64, big: usize) -> f64 {
        let a = super::super::ladder(big);
        // G = i(α*a − αa†) is Hermitian and D(α)† = exp(α*a − αa†) = exp(−iG).
        let g = Mat::from_fn(big, big, |i, j| c64::new(0.0, 1.0) * (alpha.conj() * a[(i, j)] - alpha * a[(j, i)]));
        let e = g.self_adjoint_eigen(Side::Lower).unwrap();
        let u = e.U();
        let mut v = vec![c64::new(0.0, 0.0); big];
        v[..psi.len()].copy_from_slice(psi);
        let mut out = 0.0;
        for k in 0..big {
            let mut amp = c64::new(0.0, 0.0);
            for q in 0..big {
                let ph = c64::cis(-e.S().column_vector()[q].re);
                let proj = (0..big).fold(c64::new(0.0, 0.0), |s, i| s + u[(i, q)].conj() * v[i]);
                amp += u[(k, q)] * ph * proj;
            }
            out += if k % 2 == 0 { amp.norm_sqr() } else { -amp.norm_sqr() };
        }
        2.0 / PI * out
    }

    #[test]
    fn vacuum_values() {
        let rho = density_from_state(&vacuum(20));
        let spec = GridSpec::square(0.0, 1);
        assert!((husimi_q(&rho, &spec).values[0] - 1.0 / PI).abs() < 1e-14);
        assert!((wigner(&rho, &spec).values[0] - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn coherent_peak() {
        let alpha = c64::new(1.0, -0.5);
        let rho = density_from_state(&coherent_state(alpha, 40));
        let x = alpha.re * std::f64::consts::SQRT_2;
        let p = alpha.im * std::f64::consts::SQRT_2;
        let spec = GridSpec { x_min: x, x_max: x, nx: 1, p_min: p, p_max: p, np: 1 };
        assert!((husimi_q(&rho, &spec).values[0] - 1.0 / PI).abs() < 1e-12);
        assert!((wigner(&rho, &spec).values[0] - 2.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn wigner_matches_displaced_parity() {
        let mut psi = coherent_state(c64::new(0.6, 0.3), 10);
        psi[3] += c64::new(0.2, -0.4);
        let nrm = super::super::cnorm(&psi);
        psi.iter_mut().for_each(|z| *z /= nrm);
        let rho = density_from_state(&psi);
        for &(x, p) in &[(0.0, 0.0), (0.7, -0.4), (-1.1, 0.9)] {
            let spec = GridSpec { x_min: x, x_max: x, nx: 1, p_min: p, p_max: p, np: 1 };
            let w = wigner(&rho, &spec).values[0];
            let b = brute_wigner(&psi, c64::new(x, p) * FRAC_1_SQRT_2, 60);
            assert!((w - b).abs() < 1e-9, "{w} vs {b}");
        }
    }

    #[test]
    fn distributions_normalized() {
        let rho = density_from_state(&coherent_state(c64::new(0.8, 0.2), 40));
        let spec = GridSpec::square(7.0, 141);
        assert!((husimi_q(&rho, &spec).integral_dxdp() / 2.0 - 1.0).abs() < 0.01);
        assert!((wigner(&rho, &spec).integral_dxdp() / 2.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn cat_has_negative_fringes() {
        let ops = build_operators(60, 0.2).unwrap();
        let label = make_resonance(3, 1).unwrap();
        let psi = cat_state(&CatStateSpec { alpha0: c64::new(2.5, 0.0), label, k: 0, tau: 0.0, nu_d: 3.0 }, &ops).unwrap();
        let rho = density_from_state(&psi);
        let w = wigner(&rho, &GridSpec::square(5.0, 61));
        let min = w.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min < -0.05, "{min}");
        let q = husimi_q(&rho, &GridSpec::square(5.0, 61));
        assert!(q.values.iter().all(|v| *v >= -1e-14 && *v <= 1.0 / PI + 1e-12));
    }
}

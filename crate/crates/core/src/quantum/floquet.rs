use super::{cdot, cnorm, FockOperators, Propagation, QuantumError};
use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par, Side};
use std::f64::consts::PI;

const CLUSTER_TOL: f64 = 1e-6;
const DEGENERATE_TOL: f64 = 1e-10;
const PROBE_ANGLE: f64 = 0.3;

/// Floquet modes `φ_r(t_k)` with quasienergies in `[−ν_d/2, ν_d/2)`, sorted
/// by period-averaged photon number.
#[derive(Debug, Clone)]
pub struct FloquetDecomposition {
    pub nu_d: f64,
    pub quasienergies: Vec<f64>,
    /// `modes[k]` holds `φ_r(t_k)` in column `r`.
    pub modes: Vec<Mat<c64>>,
    pub times: Vec<f64>,
    pub mean_photons: Vec<f64>,
    pub convergence_flag: bool,
    /// Eigenvalue pairs of `U(T)` closer than 1e-10.
    pub degenerate_pairs: usize,
}

impl FloquetDecomposition {
    pub fn len(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quasienergies.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.modes.first().map_or(0, |m| m.nrows())
    }

    pub fn mode_at(&self, r: usize, k: usize) -> Vec<c64> {
        let m = &self.modes[k];
        (0..m.nrows()).map(|i| m[(i, r)]).collect()
    }

    pub fn mode_samples(&self, r: usize) -> Vec<Vec<c64>> {
        (0..self.samples()).map(|k| self.mode_at(r, k)).collect()
    }

    /// Drops all but the `n` lowest-photon modes.
    pub fn retain(&mut self, n: usize) {
        let n = n.min(self.len());
        self.quasienergies.truncate(n);
        self.mean_photons.truncate(n);
        for m in &mut self.modes {
            *m = m.as_ref().subcols(0, n).to_owned();
        }
    }

    pub fn degenerate_warning(&self) -> bool {
        self.degenerate_pairs > 0
    }
}

/// Folds a quasienergy into `[−ν/2, ν/2)`.
pub fn fold_quasienergy(e: f64, nu: f64) -> f64 {
    let f = e - nu * ((e + 0.5 * nu) / nu).floor();
    if f >= 0.5 * nu {
        f - nu
    } else {
        f
    }
}

fn hermitian_eig(m: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>), QuantumError> {
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|e| QuantumError::Eigen(format!("{e:?}")))?;
    let vals = (0..m.nrows()).map(|i| e.S().column_vector()[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

/// `(e^{−ic}U + e^{ic}U†)/2`, whose eigenvalues are `cos(θ − c)` for `U = e^{iθ}`.
fn hermitian_part(u: &Mat<c64>, c: f64) -> Mat<c64> {
    let p = c64::cis(-c);
    let n = u.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (p * u[(i, j)] + (p * u[(j, i)]).conj()))
}

fn clusters(vals: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || vals[i] - vals[i - 1] > tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Orthonormal eigenvectors of a unitary matrix, built from two Hermitian
/// eigenproblems so that clustered eigenvalues keep orthogonal vectors.
fn unitary_eigenvectors(u: &Mat<c64>) -> Result<(Mat<c64>, usize), QuantumError> {
    let n = u.nrows();
    let (vals, vecs) = hermitian_eig(&hermitian_part(u, PROBE_ANGLE))?;
    let mut out = Mat::<c64>::zeros(n, n);
    let mut degenerate = 0;
    for (a, b) in clusters(&vals, CLUSTER_TOL) {
        let q = vecs.as_ref().subcols(a, b - a);
        if b - a == 1 {
            out.as_mut().subcols_mut(a, 1).copy_from(q);
            continue;
        }
        let k = hermitian_part(u, PROBE_ANGLE + 0.5 * PI);
        let compressed = q.adjoint() * &k * q;
        let (svals, svecs) = hermitian_eig(&compressed)?;
        let sub = q * &svecs;
        for (c, d) in clusters(&svals, DEGENERATE_TOL) {
            let block = sub.as_ref().subcols(c, d - c);
            if d - c == 1 {
                out.as_mut().subcols_mut(a + c, 1).copy_from(block);
                continue;
            }
            degenerate += d - c - 1;
            // Resolve the degenerate subspace by photon number.
            let nb = Mat::from_fn(d - c, d - c, |i, j| {
                (0..n).fold(c64::new(0.0, 0.0), |acc, f| acc + block[(f, i)].conj() * block[(f, j)] * f as f64)
            });
            let (_, nvecs) = hermitian_eig(&nb)?;
            let resolved = block * &nvecs;
            out.as_mut().subcols_mut(a + c, d - c).copy_from(&resolved);
        }
    }
    Ok((out, degenerate))
}

/// Diagonalizes `U(T)` and reconstructs the periodic modes at the stored sub-times.
pub fn floquet_decompose(prop: &Propagation, ops: &FockOperators) -> Result<FloquetDecomposition, QuantumError> {
    let u = &prop.total;
    let n = u.nrows();
    if n != ops.dim {
        return Err(QuantumError::InvalidArgument("propagator and operators differ in dimension".into()));
    }
    let nu = prop.nu_d;
    let period = 2.0 * PI / nu;
    let (mut v, degenerate_pairs) = unitary_eigenvectors(u)?;

    let uv = u * &v;
    let mut eps = Vec::with_capacity(n);
    for r in 0..n {
        let col: Vec<c64> = (0..n).map(|i| v[(i, r)]).collect();
        let img: Vec<c64> = (0..n).map(|i| uv[(i, r)]).collect();
        let lam = cdot(&col, &img);
        eps.push(fold_quasienergy(-lam.arg() * nu / (2.0 * PI), nu));
        let (imax, _) = col.iter().enumerate().fold((0, -1.0), |best, (i, z)| {
            if z.norm() > best.1 {
                (i, z.norm())
            } else {
                best
            }
        });
        let g = col[imax].conj() / (col[imax].norm() * cnorm(&col));
        for i in 0..n {
            v[(i, r)] *= g;
        }
    }

    let samples = prop.partials.len();
    let times: Vec<f64> = (0..samples).map(|k| k as f64 * period / samples as f64).collect();
    let mut modes = Vec::with_capacity(samples);
    let mut nbar = vec![0.0; n];
    for (k, uk) in prop.partials.iter().enumerate() {
        let mut m = Mat::<c64>::zeros(n, n);
        matmul(m.as_mut(), Accum::Replace, uk.as_ref(), v.as_ref(), c64::new(1.0, 0.0), Par::Seq);
        for r in 0..n {
            let ph = c64::cis(eps[r] * times[k]);
            let mut acc = 0.0;
            for i in 0..n {
                m[(i, r)] *= ph;
                acc += i as f64 * m[(i, r)].norm_sqr();
            }
            nbar[r] += acc / samples as f64;
        }
        modes.push(m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nbar[a].total_cmp(&nbar[b]).then(a.cmp(&b)));
    let modes = modes.into_iter().map(|m| Mat::from_fn(n, n, |i, j| m[(i, order[j])])).collect();
    Ok(FloquetDecomposition {
        nu_d: nu,
        quasienergies: order.iter().map(|&r| eps[r]).collect(),
        modes,
        times,
        mean_photons: order.iter().map(|&r| nbar[r]).collect(),
        convergence_flag: prop.convergence_flag,
        degenerate_pairs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartnerKind {
    /// The partner coincides with the mode up to a global phase.
    Symmetric,
    /// A distinct mode; `overlap` is `|⟨φ|φ̃⟩|` at the first sample.
    Distinct { overlap: f64 },
}

/// `φ̃(t_k) = e^{iπa†a} φ(t_k + T/2)`, which is again a Floquet mode with the
/// same quasienergy.
pub fn parity_partner(samples: &[Vec<c64>]) -> Result<(Vec<Vec<c64>>, PartnerKind), QuantumError> {
    let nt = samples.len();
    if nt == 0 || nt % 2 != 0 {
        return Err(QuantumError::InvalidArgument(format!("parity partner needs an even number of samples, got {nt}")));
    }
    let partner: Vec<Vec<c64>> = (0..nt)
        .map(|k| {
            samples[(k + nt / 2) % nt]
                .iter()
                .enumerate()
                .map(|(i, z)| if i % 2 == 0 { *z } else { -*z })
                .collect()
        })
        .collect();
    let overlap = cdot(&samples[0], &partner[0]).norm();
    let kind = if (overlap - 1.0).abs() < 1e-8 { PartnerKind::Symmetric } else { PartnerKind::Distinct { overlap } };
    Ok((partner, kind))
}

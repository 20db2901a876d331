use super::QuantumError;
use crate::params::NormalizedModel;
use faer::{c64, Mat, Side};

/// Ladder-operator algebra on the lowest `dim` Fock levels, together with
/// the eigenbasis of the truncated position operator.
#[derive(Debug, Clone)]
pub struct FockOperators {
    pub dim: usize,
    pub lambda: f64,
    pub x_op: Mat<c64>,
    pub p_op: Mat<c64>,
    pub a_op: Mat<c64>,
    pub number_op: Mat<c64>,
    /// `exp(i√2λx)`.
    pub displacement_op: Mat<c64>,
    /// Eigenvalues of the truncated `x`.
    pub x_eigenvalues: Vec<f64>,
    /// Real orthogonal eigenvectors of the truncated `x`, one per column.
    pub x_eigenvectors: Mat<f64>,
}

/// Annihilation operator on `dim` levels, `a|k⟩ = √k |k−1⟩`.
pub fn ladder(dim: usize) -> Mat<f64> {
    Mat::from_fn(dim, dim, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

pub fn build_operators(dim: usize, lambda: f64) -> Result<FockOperators, QuantumError> {
    if dim < 16 {
        return Err(QuantumError::DimensionTooSmall(dim));
    }
    let a = ladder(dim);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let x = Mat::from_fn(dim, dim, |i, j| r * (a[(i, j)] + a[(j, i)]));
    let eig = x.self_adjoint_eigen(Side::Lower).map_err(|e| QuantumError::Eigen(format!("{e:?}")))?;
    let w = eig.U().to_owned();
    let xs: Vec<f64> = (0..dim).map(|i| eig.S().column_vector()[i]).collect();
    let k = std::f64::consts::SQRT_2 * lambda;
    let phases: Vec<c64> = xs.iter().map(|&v| c64::cis(k * v)).collect();
    let displacement_op = Mat::from_fn(dim, dim, |i, j| {
        (0..dim).fold(c64::new(0.0, 0.0), |acc, q| acc + phases[q] * (w[(i, q)] * w[(j, q)]))
    });
    Ok(FockOperators {
        dim,
        lambda,
        x_op: x.as_ref().map(|&v| c64::new(v, 0.0)),
        p_op: Mat::from_fn(dim, dim, |i, j| c64::new(0.0, r * (a[(j, i)] - a[(i, j)]))),
        a_op: a.as_ref().map(|&v| c64::new(v, 0.0)),
        number_op: Mat::from_fn(dim, dim, |i, j| c64::new(if i == j { i as f64 } else { 0.0 }, 0.0)),
        displacement_op,
        x_eigenvalues: xs,
        x_eigenvectors: w,
    })
}

impl FockOperators {
    /// Diagonal of `H₀ = a†a + 1/2`.
    pub fn bare_energies(&self) -> Vec<f64> {
        (0..self.dim).map(|k| k as f64 + 0.5).collect()
    }

    /// Applies `a` to a state vector.
    pub fn apply_a(&self, psi: &[c64]) -> Vec<c64> {
        let n = psi.len();
        (0..n).map(|k| if k + 1 < n { psi[k + 1] * ((k + 1) as f64).sqrt() } else { c64::new(0.0, 0.0) }).collect()
    }

    pub fn mean_photons(&self, psi: &[c64]) -> f64 {
        psi.iter().enumerate().map(|(k, z)| k as f64 * z.norm_sqr()).sum()
    }
}

/// `H(τ)` as a real symmetric matrix: `H₀ − (β/2λ²) Re[e^{iξ_d sin ν_dτ} D]`.
pub fn hamiltonian_at(tau: f64, model: &NormalizedModel, ops: &FockOperators) -> Mat<f64> {
    let phase = c64::cis(model.xi_d * (model.nu_d * tau).sin());
    let amp = model.beta / (2.0 * ops.lambda * ops.lambda);
    Mat::from_fn(ops.dim, ops.dim, |i, j| {
        let h0 = if i == j { i as f64 + 0.5 } else { 0.0 };
        h0 - amp * (phase * ops.displacement_op[(i, j)]).re
    })
}

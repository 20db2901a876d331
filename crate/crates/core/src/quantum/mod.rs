//! Truncated Fock-space model of the driven oscillator:
//!
//! ```text
//! H(τ) = (p² + x²)/2 − (β/2λ²) cos(√2λx + ξ_d sin(ν_d τ))
//! ```
//!
//! The one-period propagator, its Floquet decomposition, reference cat states
//! and phase-space distributions.

mod cats;
mod floquet;
mod operators;
mod phase_space;
mod propagator;

pub use cats::{
    cat_fidelity, cat_state, coherent_state, quasienergy_gap, CatFit, CatSettings, CatStateSpec, GapCoupling, GapResult,
};
pub use floquet::{floquet_decompose, fold_quasienergy, parity_partner, FloquetDecomposition, PartnerKind};
pub use operators::{build_operators, hamiltonian_at, ladder, FockOperators};
pub use phase_space::{density_from_mixture, density_from_state, husimi_q, wigner, GridSpec, PhaseSpaceGrid};
pub use propagator::{one_period_propagator, Propagation, PropagatorSettings, SplitScheme};

use faer::c64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("Fock truncation {0} is below the minimum of 16")]
    DimensionTooSmall(usize),
    #[error("propagator unitarity defect {0:e} exceeds 1e-6")]
    UnitarityLoss(f64),
    #[error("|alpha|^2 + 6|alpha| = {load} does not fit in dimension {dim}")]
    TruncationUnsafe { load: f64, dim: usize },
    #[error("no cat manifold: mean fidelity {0} below 0.5")]
    NoCatManifold(f64),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub(crate) fn cdot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).fold(c64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn cnorm(a: &[c64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

//! End-to-end Floquet–Markov evaluation of a single drive point.

use crate::markov::{golden_rule_rates, rate_matrix, steady_state, transition_elements, BathSpec, MarkovError, SteadyState};
use crate::params::NormalizedModel;
use crate::quantum::{build_operators, floquet_decompose, one_period_propagator, FloquetDecomposition, FockOperators, PropagatorSettings, QuantumError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSettings {
    pub dim: usize,
    pub n_keep: usize,
    pub propagator: PropagatorSettings,
    pub bath: BathSpec,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self { dim: 300, n_keep: 60, propagator: PropagatorSettings::default(), bath: BathSpec::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub ops: FockOperators,
    /// Floquet modes restricted to the `n_keep` lowest-photon ones.
    pub decomp: FloquetDecomposition,
    pub steady: SteadyState,
    pub unitarity_defect: f64,
    pub convergence_error: f64,
}

pub fn run_floquet_markov(model: &NormalizedModel, settings: &PipelineSettings) -> Result<PipelineOutput, PipelineError> {
    let ops = build_operators(settings.dim, model.lambda)?;
    floquet_markov_with(model, ops, settings)
}

/// Same as [`run_floquet_markov`] with prebuilt operators, which scans reuse.
pub fn floquet_markov_with(
    model: &NormalizedModel,
    ops: FockOperators,
    settings: &PipelineSettings,
) -> Result<PipelineOutput, PipelineError> {
    let prop = one_period_propagator(model, &ops, &settings.propagator)?;
    let mut decomp = floquet_decompose(&prop, &ops)?;
    decomp.retain(settings.n_keep);
    let elems = transition_elements(&decomp, settings.bath.m_max)?;
    let rates = golden_rule_rates(&elems, &decomp, &settings.bath)?;
    let steady = steady_state(&rate_matrix(&rates))?;
    Ok(PipelineOutput {
        ops,
        decomp,
        steady,
        unitarity_defect: prop.unitarity_defect,
        convergence_error: prop.convergence_error,
    })
}

//! `floquet-spectrum`: one drive point through the Floquet–Markov pipeline.

use super::{Context, Summary};
use crate::config::PhaseSpaceKind;
use crate::output::{num, write_json, CsvOut};
use anyhow::Result;
use josc::markov::asymptotic_state;
use josc::params::{NormalizedModel, ResonanceLabel};
use josc::pipeline::{run_floquet_markov, PipelineOutput};
use josc::quantum::{cat_fidelity, fold_quasienergy, husimi_q, wigner, CatSettings};
use serde::Serialize;

/// Quasienergy tolerance for the cat-manifold degeneracy flag.
pub const DEGENERACY_TOL: f64 = 1e-3;

#[derive(Debug, Serialize)]
struct Manifold {
    label: String,
    modes: Vec<usize>,
    splitting: f64,
    degenerate: bool,
    cat_fidelities: Option<Vec<f64>>,
    cat_alpha: Option<[f64; 2]>,
    cat_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Report {
    schema: String,
    model: NormalizedModel,
    dim: usize,
    n_keep: usize,
    samples: usize,
    m_max: usize,
    convergence_flag: bool,
    convergence_error: f64,
    unitarity_defect: f64,
    degenerate_pairs: usize,
    n_occ: f64,
    entropy: f64,
    status: &'static str,
    kernel_gap: f64,
    manifold: Option<Manifold>,
}

/// The `L` most populated modes and their spread modulo `ν_d/L`.
fn manifold(out: &PipelineOutput, label: ResonanceLabel, nu: f64) -> Manifold {
    let legs = label.legs() as usize;
    let modes: Vec<usize> = out.steady.dominant_modes().into_iter().take(legs).collect();
    let q = &out.decomp.quasienergies;
    let period = nu / legs as f64;
    let splitting = modes
        .iter()
        .flat_map(|&a| modes.iter().map(move |&b| fold_quasienergy(q[a] - q[b], period).abs()))
        .fold(0.0, f64::max);
    let fit = cat_fidelity(&out.decomp, label, &out.ops, &CatSettings::default());
    let (cat_fidelities, cat_alpha, cat_error) = match fit {
        Ok(f) => (Some(f.fidelities), Some([f.alpha.re, f.alpha.im]), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Manifold {
        label: label.to_string(),
        degenerate: modes.len() == legs && splitting <= DEGENERACY_TOL,
        modes,
        splitting,
        cat_fidelities,
        cat_alpha,
        cat_error,
    }
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let model = ctx.cfg.model()?;
    let settings = ctx.cfg.quantum.settings()?;
    let label = ctx.cfg.label()?;
    let grid = ctx.cfg.phase_space.as_ref().map(|p| p.grid()).transpose()?;
    let out = run_floquet_markov(&model, &settings)?;
    let manifold = label.map(|l| manifold(&out, l, model.nu_d));
    let flagged = |r: usize| manifold.as_ref().is_some_and(|m| m.degenerate && m.modes.contains(&r));

    let d = &out.decomp;
    let mut spec = CsvOut::create(&ctx.path("spectrum.csv"), "floquet-spectrum", &[
        "mode_index",
        "quasienergy",
        "mean_photons",
        "manifold",
    ])?;
    let mut steady = CsvOut::create(&ctx.path("steady_state.csv"), "steady-state", &[
        "mode_index",
        "quasienergy",
        "mean_photons",
        "p_r",
    ])?;
    for r in 0..d.len() {
        let (q, n) = (num(d.quasienergies[r]), num(d.mean_photons[r]));
        spec.row([r.to_string(), q.clone(), n.clone(), u8::from(flagged(r)).to_string()])?;
        steady.row([r.to_string(), q, n, num(out.steady.probabilities[r])])?;
    }
    spec.finish()?;
    steady.finish()?;

    if let (Some(cfg), Some(grid)) = (&ctx.cfg.phase_space, grid) {
        let rho = asymptotic_state(&out.steady, d, cfg.tau)?;
        let (name, values) = match cfg.kind {
            PhaseSpaceKind::Husimi => ("husimi", husimi_q(&rho, &grid)),
            PhaseSpaceKind::Wigner => ("wigner", wigner(&rho, &grid)),
        };
        let mut csv = CsvOut::create(&ctx.path(&format!("{name}.csv")), name, &["x", "p", "value"])?;
        for (ix, x) in values.xs.iter().enumerate() {
            for (ip, p) in values.ps.iter().enumerate() {
                csv.row([num(*x), num(*p), num(values.at(ix, ip))])?;
            }
        }
        csv.finish()?;
    }

    let report = Report {
        schema: crate::output::schema_line("floquet-spectrum-report"),
        model,
        dim: settings.dim,
        n_keep: d.len(),
        samples: d.samples(),
        m_max: settings.bath.m_max,
        convergence_flag: d.convergence_flag,
        convergence_error: out.convergence_error,
        unitarity_defect: out.unitarity_defect,
        degenerate_pairs: d.degenerate_pairs,
        n_occ: out.steady.n_occ,
        entropy: out.steady.entropy,
        status: out.steady.status.as_str(),
        kernel_gap: out.steady.kernel_gap,
        manifold,
    };
    write_json(&ctx.path("spectrum.json"), &report)?;
    Ok(Summary { points: 1, failures: 0 })
}

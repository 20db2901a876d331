//! `gap-scan`: quasienergy gap of the cat manifold versus λ at fixed mean photon number.

use super::{one_line, Context, Summary};
use crate::config::RunConfig;
use crate::output::{num, CsvOut};
use anyhow::{anyhow, Result};
use josc::averaging::{classify_stability, equilibria_at_radius, nu_d_from_delta, AveragedModel, Stability};
use josc::params::{to_symmetric_frame, NormalizedModel, ResonanceLabel};
use josc::pipeline::run_floquet_markov;
use josc::pipeline::PipelineSettings;
use josc::quantum::{cat_fidelity, quasienergy_gap, CatSettings, GapCoupling};
use rayon::prelude::*;

struct Point {
    nu_d: f64,
    delta: f64,
    gap: f64,
    fidelity: f64,
    n_occ: f64,
    status: &'static str,
}

/// Detuning placing a stable node of the averaged model at `R* = 2λ√n̄`.
fn resonant_delta(model: &NormalizedModel, label: ResonanceLabel, n_bar: f64) -> Result<(f64, f64)> {
    let frame = to_symmetric_frame(model)?;
    let averaged = AveragedModel::from_frame(label, &frame);
    let r_star = 2.0 * model.lambda * n_bar.sqrt();
    let node = equilibria_at_radius(r_star, &averaged)
        .into_iter()
        .filter_map(|(th, d)| classify_stability(th, r_star, d, &averaged).ok())
        .find(|e| e.stability == Stability::Node)
        .ok_or_else(|| anyhow!("no stable node at R* = {r_star}"))?;
    Ok((node.delta, nu_d_from_delta(node.delta, label, frame.kappa)))
}

fn point(
    model: &NormalizedModel,
    label: ResonanceLabel,
    n_bar: f64,
    coupling: GapCoupling,
    settings: &PipelineSettings,
) -> Result<Point> {
    let (delta, nu_d) = resonant_delta(model, label, n_bar)?;
    let model = NormalizedModel { nu_d, ..*model };
    let out = run_floquet_markov(&model, settings)?;
    let fit = cat_fidelity(&out.decomp, label, &out.ops, &CatSettings::default())?;
    let gap = quasienergy_gap(&out.decomp, &fit.modes, nu_d / label.legs() as f64, coupling)?;
    Ok(Point {
        nu_d,
        delta,
        gap: gap.gap,
        fidelity: fit.mean_fidelity,
        n_occ: out.steady.n_occ,
        status: out.steady.status.as_str(),
    })
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let cfg = RunConfig::section(&ctx.cfg.gap, "gap")?;
    let label = ctx.cfg.require_label()?;
    let settings = ctx.cfg.quantum.settings()?;
    let base = ctx.cfg.model()?;
    let models: Vec<NormalizedModel> = cfg.lambdas.iter().map(|&lambda| NormalizedModel { lambda, ..base }).collect();
    for m in &models {
        m.validate().map_err(|e| crate::config::ConfigError(format!("'gap.lambdas': {e}")))?;
    }

    let results: Vec<Result<Point>> = ctx.pool.install(|| {
        models.par_iter().map(|m| point(m, label, cfg.n_bar, cfg.coupling(), &settings)).collect()
    });
    let mut csv = CsvOut::create(&ctx.path("gap.csv"), "gap-scan", &[
        "lambda",
        "n_bar",
        "nu_d",
        "delta",
        "gap",
        "mean_cat_fidelity",
        "n_occ",
        "status",
    ])?;
    let mut failures = 0;
    for (m, res) in models.iter().zip(results) {
        let row = match res {
            Ok(p) => [p.nu_d, p.delta, p.gap, p.fidelity, p.n_occ].map(num).to_vec().into_iter().chain([p.status.to_string()]).collect::<Vec<_>>(),
            Err(e) => {
                failures += 1;
                let mut row = vec![num(f64::NAN); 5];
                row.push(format!("failed: {}", one_line(e)));
                row
            }
        };
        csv.row([num(m.lambda), num(cfg.n_bar)].into_iter().chain(row))?;
    }
    csv.finish()?;
    Ok(Summary { points: models.len(), failures })
}

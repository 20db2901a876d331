//! `chaos-bounds`: rigorous regularity certificates at one drive point.

use super::{Context, Summary};
use crate::config::RunConfig;
use crate::output::write_json;
use anyhow::Result;
use josc::bounds::{classify_point, RegularityReport};
use josc::params::{to_symmetric_frame, NormalizedModel, SymmetricFrame};
use serde::Serialize;

#[derive(Serialize)]
struct Inputs {
    model: NormalizedModel,
    n_bar: u32,
}

#[derive(Serialize)]
struct Report {
    schema: &'static str,
    inputs: Inputs,
    frame: SymmetricFrame,
    report: RegularityReport,
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let n_bar = RunConfig::section(&ctx.cfg.bounds, "bounds")?.n_bar;
    let model = ctx.cfg.model()?;
    let frame = to_symmetric_frame(&model)?;
    let report = classify_point(&model, n_bar)?;
    write_json(&ctx.path("bounds.json"), &Report {
        schema: "chaos-bounds/v1",
        inputs: Inputs { model, n_bar },
        frame,
        report,
    })?;
    Ok(Summary { points: 1, failures: 0 })
}

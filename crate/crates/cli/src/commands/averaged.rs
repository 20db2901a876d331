//! `averaged-equilibria`: equilibrium branches of the averaged model.

use super::{Context, Summary};
use crate::config::{radius_grid, RunConfig};
use crate::output::{num, CsvOut};
use anyhow::Result;
use josc::averaging::{bifurcation_scan, AveragedModel};
use josc::params::to_symmetric_frame;

pub fn run(ctx: &Context) -> Result<Summary> {
    let cfg = RunConfig::section(&ctx.cfg.averaged, "averaged")?;
    let label = ctx.cfg.require_label()?;
    let frame = to_symmetric_frame(&ctx.cfg.model()?)?;
    let grid = radius_grid("averaged", cfg.r_max, cfg.r_steps)?;
    let model = AveragedModel::from_frame(label, &frame);
    let scan = bifurcation_scan(&model, &grid);

    let mut branches = CsvOut::create(&ctx.path("branches.csv"), "averaged-branches", &[
        "R_star",
        "theta_star",
        "delta",
        "stability",
        "branch",
    ])?;
    for p in &scan.points {
        let stability = p.stability.map_or("marginal", |s| s.as_str());
        branches.row([num(p.r_star), num(p.theta_star), num(p.delta), stability.into(), p.branch.to_string()])?;
    }
    branches.finish()?;

    let mut folds = CsvOut::create(&ctx.path("folds.csv"), "averaged-folds", &["branch", "R_star", "delta"])?;
    for f in &scan.folds {
        folds.row([f.branch.to_string(), num(f.r_star), num(f.delta)])?;
    }
    folds.finish()?;

    let mut index = CsvOut::create(&ctx.path("index.csv"), "averaged-index", &["delta", "node_minus_saddle"])?;
    for &d in &cfg.deltas {
        index.row([num(d), scan.index_at(d).map_or("undetermined".into(), |i| i.to_string())])?;
    }
    index.finish()?;
    Ok(Summary { points: scan.points.len(), failures: 0 })
}

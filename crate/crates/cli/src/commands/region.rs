//! `resonance-region`: stable-node detuning range per drive amplitude.

use super::{Context, Summary};
use crate::config::{radius_grid, Axis, RunConfig};
use crate::output::{num, CsvOut};
use anyhow::Result;
use josc::averaging::{region_at, resonant_drive_frequency, AveragedModel};
use josc::params::to_symmetric_frame;
use rayon::prelude::*;

pub fn run(ctx: &Context) -> Result<Summary> {
    let cfg = RunConfig::section(&ctx.cfg.region, "region")?;
    let label = ctx.cfg.require_label()?;
    let xis = Axis::new("region.xi_d", cfg.xi_d, cfg.xi_steps)?.values();
    let grid = radius_grid("region", cfg.r_max, cfg.r_steps)?;
    let model = ctx.cfg.model_with(None, Some(xis[0]))?;
    let frame = to_symmetric_frame(&model)?;
    let averaged = AveragedModel::from_frame(label, &frame);

    let rows = ctx.pool.install(|| xis.par_iter().map(|&xi| region_at(&averaged, xi, &grid)).collect::<Vec<_>>());
    let mut csv = CsvOut::create(&ctx.path("region.csv"), "resonance-region", &[
        "xi_d",
        "delta_min",
        "delta_max",
        "nu_d_min",
        "nu_d_max",
    ])?;
    for (&xi, row) in xis.iter().zip(&rows) {
        let nan = f64::NAN;
        let (a, b, c, d) = row.map_or((nan, nan, nan, nan), |r| (r.delta_min, r.delta_max, r.nu_d_min, r.nu_d_max));
        csv.row([num(xi), num(a), num(b), num(c), num(d)])?;
    }
    csv.finish()?;

    let mut stark = CsvOut::create(&ctx.path("ac_stark.csv"), "ac-stark", &["xi_d", "nu_d"])?;
    for &xi in &xis {
        stark.row([num(xi), num(resonant_drive_frequency(label, model.beta, xi))])?;
    }
    stark.finish()?;
    Ok(Summary { points: xis.len(), failures: 0 })
}

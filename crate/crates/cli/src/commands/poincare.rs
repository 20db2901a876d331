//! `poincare`: stroboscopic portraits and periodic orbits of the classical map.

use super::{one_line, Context, Summary};
use crate::config::RunConfig;
use crate::output::{num, CsvOut};
use anyhow::Result;
use josc::classical::{ClassicalSystem, OrbitClass, State2, Symmetry, CHAOS_HORIZON};
use josc::params::to_symmetric_frame;
use rayon::prelude::*;

fn class_name(c: OrbitClass) -> &'static str {
    match c {
        OrbitClass::Regular => "regular",
        OrbitClass::Chaotic => "chaotic",
        OrbitClass::Escaped => "escaped",
    }
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let cfg = RunConfig::section(&ctx.cfg.poincare, "poincare")?;
    let seeds = cfg.all_seeds()?;
    let frame = to_symmetric_frame(&ctx.cfg.model()?)?;
    let mut sys = ClassicalSystem::new(frame);
    if let Some(tol) = cfg.tolerance {
        sys = sys.with_tolerance(tol);
    }

    let orbits = ctx.pool.install(|| {
        seeds.par_iter().map(|s| sys.portrait_orbit(State2::new(s[0], s[1]), cfg.iterations)).collect::<Vec<_>>()
    });
    let mut portrait = CsvOut::create(&ctx.path("portrait.csv"), "poincare-portrait", &["seed_index", "iter", "x", "p"])?;
    let mut summary = CsvOut::create(&ctx.path("portrait_summary.csv"), "poincare-summary", &[
        "seed_index",
        "x0",
        "p0",
        "lyapunov",
        "class",
    ])?;
    for (i, o) in orbits.iter().enumerate() {
        portrait.row([i.to_string(), "0".into(), num(o.seed.x), num(o.seed.p)])?;
        for (k, z) in o.iterates.iter().enumerate() {
            portrait.row([i.to_string(), (k + 1).to_string(), num(z.x), num(z.p)])?;
        }
        summary.row([
            i.to_string(),
            num(o.seed.x),
            num(o.seed.p),
            num(o.lyapunov_estimate),
            class_name(o.classification).into(),
        ])?;
    }
    portrait.finish()?;
    summary.finish()?;

    let found = ctx.pool.install(|| {
        cfg.orbits
            .par_iter()
            .map(|g| {
                let orbit = sys.find_periodic_orbit(State2::new(g.x, g.p), g.n)?;
                let lyap = sys.lyapunov_exponent(orbit.points[0], CHAOS_HORIZON).unwrap_or(f64::NAN);
                Ok((orbit, lyap))
            })
            .collect::<Vec<Result<_, josc::classical::ClassicalError>>>()
    });
    let mut table = CsvOut::create(&ctx.path("orbits.csv"), "periodic-orbits", &[
        "n",
        "m",
        "symmetry",
        "residual",
        "mult_re1",
        "mult_im1",
        "mult_re2",
        "mult_im2",
        "lyapunov",
        "x",
        "p",
        "status",
    ])?;
    let mut failures = 0;
    for (g, res) in cfg.orbits.iter().zip(found) {
        match res {
            Ok((o, lyap)) => {
                let sym = match o.symmetry {
                    Symmetry::Symmetric => "symmetric",
                    Symmetry::PairedPartner => "paired",
                };
                let status = if o.minimal_period == o.n { "ok".to_string() } else { format!("period {}", o.minimal_period) };
                table.row([
                    o.n.to_string(),
                    o.winding_m.map_or(String::new(), |m| m.to_string()),
                    sym.into(),
                    num(o.residual),
                    num(o.multipliers[0].re),
                    num(o.multipliers[0].im),
                    num(o.multipliers[1].re),
                    num(o.multipliers[1].im),
                    num(lyap),
                    num(o.points[0].x),
                    num(o.points[0].p),
                    status,
                ])?;
            }
            Err(e) => {
                failures += 1;
                let nan = num(f64::NAN);
                let mut row = vec![g.n.to_string(), String::new(), String::new()];
                row.extend(std::iter::repeat_n(nan, 6));
                row.extend([num(g.x), num(g.p), format!("failed: {}", one_line(e))]);
                table.row(row)?;
            }
        }
    }
    table.finish()?;
    Ok(Summary { points: seeds.len() + cfg.orbits.len(), failures })
}

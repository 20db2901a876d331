//! `nocc-map`: effective number of occupied Floquet modes over a drive grid.
//!
//! Rows are appended as points finish so an interrupted scan can resume;
//! the final file is rewritten in grid order.

use super::{one_line, Context, Summary};
use crate::config::{Axis, RunConfig};
use crate::output::{num, schema_line, CsvOut};
use anyhow::{Context as _, Result};
use josc::pipeline::floquet_markov_with;
use josc::quantum::build_operators;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

const FILE: &str = "nocc_map.csv";
const ERRORS: &str = "nocc_map_errors.csv";
const SCHEMA: &str = "nocc-map";
const HEADER: [&str; 4] = ["nu_d", "xi_d", "n_occ", "status"];
pub const FAILED: &str = "failed";

#[derive(Debug, Clone)]
struct Row {
    nu: String,
    xi: String,
    n_occ: String,
    status: String,
}

/// Previously completed rows keyed by their formatted coordinates.
fn completed(path: &Path) -> Result<HashMap<(String, String), Row>> {
    let mut done = HashMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).from_path(path)?;
    for rec in reader.records() {
        let Ok(rec) = rec else { continue };
        if rec.len() != HEADER.len() || rec[3] == *FAILED {
            continue;
        }
        let row = Row { nu: rec[0].into(), xi: rec[1].into(), n_occ: rec[2].into(), status: rec[3].into() };
        done.insert((row.nu.clone(), row.xi.clone()), row);
    }
    Ok(done)
}

pub fn grid(cfg: &RunConfig) -> Result<Vec<(f64, f64)>> {
    let scan = RunConfig::section(&cfg.scan, "scan")?;
    let nus = Axis::new("scan.nu_d", scan.nu_d, scan.nu_steps)?.values();
    let xis = Axis::new("scan.xi_d", scan.xi_d, scan.xi_steps)?.values();
    Ok(xis.iter().flat_map(|&xi| nus.iter().map(move |&nu| (nu, xi))).collect())
}

pub fn run(ctx: &Context) -> Result<Summary> {
    let points = grid(&ctx.cfg)?;
    let base = ctx.cfg.model_with(Some(points[0].0), Some(points[0].1))?;
    let settings = ctx.cfg.quantum.settings()?;
    for &(nu, xi) in &points {
        ctx.cfg.model_with(Some(nu), Some(xi))?;
    }

    let path = ctx.path(FILE);
    let done = if ctx.resume { completed(&path)? } else { HashMap::new() };
    let todo: Vec<usize> = (0..points.len())
        .filter(|&i| !done.contains_key(&(num(points[i].0), num(points[i].1))))
        .collect();

    // Keep completed rows on disk before appending new ones.
    {
        let mut f = std::fs::File::create(&path)?;
        writeln!(f, "{}", schema_line(SCHEMA))?;
        writeln!(f, "{}", HEADER.join(","))?;
        let mut kept: Vec<&Row> = done.values().collect();
        kept.sort_by(|a, b| (&a.xi, &a.nu).cmp(&(&b.xi, &b.nu)));
        for r in kept {
            writeln!(f, "{},{},{},{}", r.nu, r.xi, r.n_occ, r.status)?;
        }
    }
    let sink = Mutex::new(OpenOptions::new().append(true).open(&path)?);

    let ops = build_operators(settings.dim, base.lambda)?;
    let results: Vec<(usize, Row, Option<String>)> = ctx.pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let (nu, xi) = points[i];
                let model = ctx.cfg.model_with(Some(nu), Some(xi)).expect("validated above");
                let (n_occ, status, err) = match floquet_markov_with(&model, ops.clone(), &settings) {
                    Ok(out) => (num(out.steady.n_occ), out.steady.status.as_str().to_string(), None),
                    Err(e) => (num(f64::NAN), FAILED.to_string(), Some(one_line(e))),
                };
                let row = Row { nu: num(nu), xi: num(xi), n_occ, status };
                if let Ok(mut f) = sink.lock() {
                    let _ = writeln!(f, "{},{},{},{}", row.nu, row.xi, row.n_occ, row.status);
                    let _ = f.flush();
                }
                (i, row, err)
            })
            .collect()
    });

    let mut by_index: Vec<Option<Row>> = points
        .iter()
        .map(|&(nu, xi)| done.get(&(num(nu), num(xi))).cloned())
        .collect();
    let mut errors = Vec::new();
    for (i, row, err) in results {
        if let Some(e) = err {
            errors.push((i, e));
        }
        by_index[i] = Some(row);
    }

    let tmp = ctx.path(&format!("{FILE}.tmp"));
    let mut csv = CsvOut::create(&tmp, SCHEMA, &HEADER)?;
    for row in by_index.iter().flatten() {
        csv.row([&row.nu, &row.xi, &row.n_occ, &row.status])?;
    }
    csv.finish()?;
    std::fs::rename(&tmp, &path).with_context(|| format!("replacing {}", path.display()))?;

    errors.sort_by_key(|e| e.0);
    let err_path = ctx.path(ERRORS);
    if errors.is_empty() {
        if err_path.exists() {
            std::fs::remove_file(&err_path)?;
        }
    } else {
        let mut csv = CsvOut::create(&err_path, "nocc-map-errors", &["nu_d", "xi_d", "message"])?;
        for (i, msg) in &errors {
            csv.row([num(points[*i].0), num(points[*i].1), msg.clone()])?;
        }
        csv.finish()?;
    }
    Ok(Summary { points: points.len(), failures: errors.len() })
}

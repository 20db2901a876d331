//! `josc`: batch driver for the driven Josephson oscillator library.

mod commands;
mod config;
mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::{Context, Summary};
use config::{ConfigError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "josc", version, about = "Floquet, classical and averaged analysis of a driven Josephson oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for grid scans.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Skip grid points already present in the output.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Floquet modes and steady state at one drive point.
    FloquetSpectrum,
    /// Occupied-mode count over a (nu_d, xi_d) grid.
    NoccMap,
    /// Stroboscopic portrait and periodic orbits of the classical map.
    Poincare,
    /// Equilibrium branches of the averaged model.
    AveragedEquilibria,
    /// Stable-node region in (xi_d, nu_d).
    ResonanceRegion,
    /// Regularity certificates at one drive point.
    ChaosBounds,
    /// Cat-manifold quasienergy gap versus lambda.
    GapScan,
}

fn run(cli: &Cli) -> Result<Summary> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError("'--config': required".into()))?;
    let cfg = RunConfig::load(path)?;
    let ctx = Context::new(cfg, cli.out.clone(), cli.workers, cli.resume)?;
    match cli.command {
        Command::FloquetSpectrum => commands::spectrum::run(&ctx),
        Command::NoccMap => commands::nocc::run(&ctx),
        Command::Poincare => commands::poincare::run(&ctx),
        Command::AveragedEquilibria => commands::averaged::run(&ctx),
        Command::ResonanceRegion => commands::region::run(&ctx),
        Command::ChaosBounds => commands::bounds::run(&ctx),
        Command::GapScan => commands::gap::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(s) if s.failures > 0 => {
            eprintln!("{} of {} points failed", s.failures, s.points);
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Cli;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}

use crate::config::RunConfig;
use anyhow::Result;
use std::path::PathBuf;

pub mod averaged;
pub mod bounds;
pub mod gap;
pub mod nocc;
pub mod poincare;
pub mod region;
pub mod spectrum;

/// Shared state of one invocation.
pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub pool: rayon::ThreadPool,
    pub resume: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, out: PathBuf, workers: Option<usize>, resume: bool) -> Result<Self> {
        std::fs::create_dir_all(&out)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            builder = builder.num_threads(n.max(1));
        }
        Ok(Self { cfg, out, pool: builder.build()?, resume })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Number of grid points or items that failed; non-zero maps to exit code 3.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub points: usize,
    pub failures: usize,
}

/// Single-line message safe to embed in a CSV field.
pub fn one_line(e: impl std::fmt::Display) -> String {
    e.to_string().replace(['\n', '\r'], " ")
}

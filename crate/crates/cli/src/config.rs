//! Run configuration: one TOML file with a `[model]` block and optional
//! per-command sections. Unknown keys are rejected.

use josc::markov::BathSpec;
use josc::params::{make_resonance, ModelConfig, NormalizedModel, ResonanceLabel};
use josc::pipeline::PipelineSettings;
use josc::quantum::{GapCoupling, GridSpec, PropagatorSettings, SplitScheme};
use serde::Deserialize;
use std::fmt;
use std::path::Path;

/// Invalid or incomplete configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("'{key}': {msg}"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub quantum: QuantumConfig,
    pub resonance: Option<ResonanceConfig>,
    pub scan: Option<ScanConfig>,
    pub phase_space: Option<PhaseSpaceConfig>,
    pub poincare: Option<PoincareConfig>,
    pub averaged: Option<AveragedConfig>,
    pub region: Option<RegionConfig>,
    pub bounds: Option<BoundsConfig>,
    pub gap: Option<GapConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Strang,
    Yoshida4,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Lowering,
    Raising,
    Bath,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumConfig {
    pub dim: usize,
    pub steps_per_period: usize,
    pub samples: usize,
    pub max_doublings: usize,
    pub convergence_tol: f64,
    pub scheme: Scheme,
    pub n_keep: usize,
    pub m_max: usize,
    pub j_const: f64,
    pub t_bath: f64,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        let p = PipelineSettings::default();
        Self {
            dim: p.dim,
            steps_per_period: p.propagator.steps_per_period,
            samples: p.propagator.samples,
            max_doublings: p.propagator.max_doublings,
            convergence_tol: p.propagator.convergence_tol,
            scheme: Scheme::Yoshida4,
            n_keep: p.n_keep,
            m_max: p.bath.m_max,
            j_const: p.bath.j_const,
            t_bath: p.bath.t_bath,
        }
    }
}

impl QuantumConfig {
    pub fn settings(&self) -> Result<PipelineSettings, ConfigError> {
        if self.dim < 16 {
            return Err(invalid("quantum.dim", "must be >= 16"));
        }
        if self.samples == 0 || self.steps_per_period % self.samples != 0 {
            return Err(invalid("quantum.steps_per_period", "must be a positive multiple of quantum.samples"));
        }
        if self.n_keep == 0 {
            return Err(invalid("quantum.n_keep", "must be >= 1"));
        }
        let bath = BathSpec { j_const: self.j_const, t_bath: self.t_bath, m_max: self.m_max };
        bath.validate().map_err(|e| invalid("quantum", e))?;
        Ok(PipelineSettings {
            dim: self.dim,
            n_keep: self.n_keep,
            propagator: PropagatorSettings {
                steps_per_period: self.steps_per_period,
                samples: self.samples,
                scheme: match self.scheme {
                    Scheme::Strang => SplitScheme::Strang,
                    Scheme::Yoshida4 => SplitScheme::Yoshida4,
                },
                max_doublings: self.max_doublings,
                convergence_tol: self.convergence_tol,
            },
            bath,
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub n: u32,
    pub m: u32,
}

/// Inclusive `[lo, hi]` axis sampled at `steps` points.
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(key: &str, range: [f64; 2], steps: usize) -> Result<Self, ConfigError> {
        let [lo, hi] = range;
        if steps == 0 {
            return Err(invalid(key, "step count must be >= 1"));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(invalid(key, format!("range [{lo}, {hi}] must be finite and ordered")));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.hi } else { self.lo + h * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub nu_d: [f64; 2],
    #[serde(default = "default_steps")]
    pub nu_steps: usize,
    pub xi_d: [f64; 2],
    #[serde(default = "default_steps")]
    pub xi_steps: usize,
}

fn default_steps() -> usize {
    60
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSpaceKind {
    Husimi,
    Wigner,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpaceConfig {
    pub kind: PhaseSpaceKind,
    pub half_width: f64,
    #[serde(default = "default_steps")]
    pub points: usize,
    #[serde(default)]
    pub tau: f64,
}

impl PhaseSpaceConfig {
    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        if !(self.half_width > 0.0) {
            return Err(invalid("phase_space.half_width", "must be > 0"));
        }
        if self.points < 2 {
            return Err(invalid("phase_space.points", "must be >= 2"));
        }
        Ok(GridSpec::square(self.half_width, self.points))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedGrid {
    pub x: [f64; 2],
    pub p: [f64; 2],
    pub nx: usize,
    pub np: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitGuess {
    pub n: usize,
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    #[serde(default)]
    pub seeds: Vec<[f64; 2]>,
    pub seed_grid: Option<SeedGrid>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub orbits: Vec<OrbitGuess>,
    pub tolerance: Option<f64>,
}

fn default_iterations() -> usize {
    500
}

impl PoincareConfig {
    pub fn all_seeds(&self) -> Result<Vec<[f64; 2]>, ConfigError> {
        let mut seeds = self.seeds.clone();
        if let Some(g) = &self.seed_grid {
            let xs = Axis::new("poincare.seed_grid.x", g.x, g.nx)?.values();
            let ps = Axis::new("poincare.seed_grid.p", g.p, g.np)?.values();
            seeds.extend(xs.iter().flat_map(|&x| ps.iter().map(move |&p| [x, p])));
        }
        if seeds.is_empty() && self.orbits.is_empty() {
            return Err(invalid("poincare.seeds", "give seeds, seed_grid or orbits"));
        }
        Ok(seeds)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragedConfig {
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_r_steps")]
    pub r_steps: usize,
    /// Detunings at which to report the node−saddle index.
    #[serde(default)]
    pub deltas: Vec<f64>,
}

fn default_r_max() -> f64 {
    8.0
}

fn default_r_steps() -> usize {
    1600
}

pub fn radius_grid(key: &str, r_max: f64, r_steps: usize) -> Result<Vec<f64>, ConfigError> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(invalid(key, "r_max must be > 0"));
    }
    if r_steps == 0 {
        return Err(invalid(key, "r_steps must be >= 1"));
    }
    Ok((1..=r_steps).map(|i| r_max * i as f64 / r_steps as f64).collect())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub xi_d: [f64; 2],
    #[serde(default = "default_steps")]
    pub xi_steps: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_r_steps")]
    pub r_steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub n_bar: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub lambdas: Vec<f64>,
    pub n_bar: f64,
    #[serde(default = "default_coupling")]
    pub coupling: Coupling,
}

fn default_coupling() -> Coupling {
    Coupling::Bath
}

impl GapConfig {
    pub fn coupling(&self) -> GapCoupling {
        match self.coupling {
            Coupling::Lowering => GapCoupling::Lowering,
            Coupling::Raising => GapCoupling::Raising,
            Coupling::Bath => GapCoupling::Bath,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Model with `nu_d` and `xi_d` optionally supplied by a scan axis.
    pub fn model_with(&self, nu_d: Option<f64>, xi_d: Option<f64>) -> Result<NormalizedModel, ConfigError> {
        let mut block = self.model.clone().ok_or_else(|| invalid("model", "missing section"))?;
        if block.E_C.is_none() {
            if let Some(nu) = nu_d {
                block.nu_d.get_or_insert(nu);
            }
            if let Some(xi) = xi_d {
                block.xi_d.get_or_insert(xi);
            }
        }
        let mut m = block.resolve().map_err(|e| invalid("model", e))?;
        if let Some(nu) = nu_d {
            m.nu_d = nu;
        }
        if let Some(xi) = xi_d {
            m.xi_d = xi;
        }
        Ok(m)
    }

    pub fn model(&self) -> Result<NormalizedModel, ConfigError> {
        self.model_with(None, None)
    }

    pub fn label(&self) -> Result<Option<ResonanceLabel>, ConfigError> {
        self.resonance
            .map(|r| make_resonance(r.n, r.m).map_err(|e| invalid("resonance", e)))
            .transpose()
    }

    pub fn require_label(&self) -> Result<ResonanceLabel, ConfigError> {
        self.label()?.ok_or_else(|| invalid("resonance", "missing section"))
    }

    pub fn section<'a, T>(opt: &'a Option<T>, key: &str) -> Result<&'a T, ConfigError> {
        opt.as_ref().ok_or_else(|| invalid(key, "missing section"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_endpoints_are_exact() {
        let a = Axis::new("a", [0.1, 0.7], 7).unwrap();
        let v = a.values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[6], 0.7);
        assert_eq!(Axis::new("a", [2.0, 3.0], 1).unwrap().values(), vec![2.0]);
        assert!(Axis::new("a", [3.0, 2.0], 4).is_err());
        assert!(Axis::new("a", [0.0, 1.0], 0).is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("[quantum]\ndimm = 3\n").unwrap_err();
        assert!(err.0.contains("dimm"), "{err}");
    }

    #[test]
    fn missing_model_key_is_named() {
        let cfg = RunConfig::parse("[model]\nbeta = 0.5\nlambda = 0.2\nxi_d = 1.0\n").unwrap();
        let err = cfg.model().unwrap_err();
        assert!(err.0.contains("nu_d"), "{err}");
    }

    #[test]
    fn scan_axes_fill_the_model() {
        let cfg = RunConfig::parse("[model]\nbeta = 0.5\nlambda = 0.2\n").unwrap();
        let m = cfg.model_with(Some(3.1), Some(1.2)).unwrap();
        assert_eq!((m.nu_d, m.xi_d), (3.1, 1.2));
    }

    #[test]
    fn quantum_defaults_match_pipeline() {
        let s = QuantumConfig::default().settings().unwrap();
        assert_eq!(s, PipelineSettings::default());
        let bad = QuantumConfig { samples: 60, ..Default::default() };
        assert!(bad.settings().unwrap_err().0.contains("steps_per_period"));
    }
}

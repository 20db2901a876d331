//! Parameter tuples and the exact changes of variables between the physical
//! circuit, the normalized model and the symmetric-dissipation frame.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge in C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

const POLE_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("drive frequency nu_d = {0} is within 1e-9 of the bare resonance; xi_d is undefined")]
    PoleAtResonance(f64),
    #[error("invalid circuit value: {0}")]
    NonPositiveEnergy(String),
    #[error("quality factor {0} is at or below 1/2 (overdamped regime)")]
    OverdampedRegime(f64),
    #[error("({0}, {1}) are not coprime")]
    NotCoprime(u32, u32),
    #[error("resonance orders must be positive, got ({0}, {1})")]
    NonPositiveOrder(u32, u32),
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),
    #[error("config: {0}")]
    Config(String),
}

/// Quality factor of the oscillator; the Hamiltonian limit is represented exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quality {
    Finite(f64),
    Infinite,
}

impl Quality {
    /// `1/(4Q²)`, zero for an infinite quality factor.
    pub fn inv_four_q_sq(self) -> f64 {
        match self {
            Quality::Finite(q) => 1.0 / (4.0 * q * q),
            Quality::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Quality::Infinite)
    }

    fn check(self) -> Result<(), ParamError> {
        match self {
            Quality::Finite(q) if !(q > 0.5) || q.is_nan() => Err(ParamError::OverdampedRegime(q)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quality::Finite(q) => write!(f, "{q}"),
            Quality::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Quality {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Quality::Finite(q) => s.serialize_f64(*q),
            Quality::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Quality {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(q) if q.is_infinite() && q > 0.0 => Ok(Quality::Infinite),
            Raw::Num(q) => Ok(Quality::Finite(q)),
            Raw::Int(q) => Ok(Quality::Finite(q as f64)),
            Raw::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(Quality::Infinite),
                other => other
                    .parse::<f64>()
                    .map(Quality::Finite)
                    .map_err(|_| serde::de::Error::custom(format!("invalid q_tilde '{s}'"))),
            },
        }
    }
}

/// Physical circuit values in SI units (energies in joules, `omega_d` in rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PhysicalCircuit {
    pub E_C: f64,
    pub E_L: f64,
    pub E_J: f64,
    pub C_g: f64,
    pub V_d_bar: f64,
    pub omega_d: f64,
}

/// Dimensionless model `(β, λ, ν_d, ξ_d, Q̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedModel {
    pub beta: f64,
    pub lambda: f64,
    pub nu_d: f64,
    pub xi_d: f64,
    pub q_tilde: Quality,
}

impl NormalizedModel {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(ParamError::InvalidModel(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(ParamError::InvalidModel(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.nu_d > 0.0) || !self.nu_d.is_finite() {
            return Err(ParamError::InvalidModel(format!("nu_d must be > 0, got {}", self.nu_d)));
        }
        if !self.xi_d.is_finite() {
            return Err(ParamError::InvalidModel("xi_d must be finite".into()));
        }
        self.q_tilde.check()
    }

    /// Drive period `2π/ν_d` in units of τ.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nu_d
    }
}

/// Parameters of the classical flow with equal damping on both quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricFrame {
    pub beta_tilde: f64,
    pub nu_d_tilde: f64,
    pub kappa: f64,
    pub xi_d: f64,
    /// Time rescaling `s = s_scale·τ`.
    pub s_scale: f64,
}

impl SymmetricFrame {
    /// Builds a frame directly from the rescaled parameters. The time scale
    /// follows from `κ² = (1 − s²)/s²`.
    pub fn from_tilde(beta_tilde: f64, kappa: f64, xi_d: f64, nu_d_tilde: f64) -> Self {
        Self {
            beta_tilde,
            nu_d_tilde,
            kappa,
            xi_d,
            s_scale: 1.0 / (1.0 + kappa * kappa).sqrt(),
        }
    }

    /// Drive period `2π/ν̃_d` in units of s.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nu_d_tilde
    }

    /// Inverts the rescaling, recovering `(β, ν_d, Q̃)`.
    pub fn to_model(&self, lambda: f64) -> NormalizedModel {
        let s2 = self.s_scale * self.s_scale;
        let q_tilde = if self.kappa == 0.0 {
            Quality::Infinite
        } else {
            Quality::Finite(1.0 / (2.0 * self.kappa * self.s_scale))
        };
        NormalizedModel {
            beta: self.beta_tilde * s2,
            lambda,
            nu_d: self.nu_d_tilde * self.s_scale,
            xi_d: self.xi_d,
            q_tilde,
        }
    }
}

/// An `(n:m)` resonance with parity bit `r = (n + m) mod 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResonanceLabel {
    pub n: u32,
    pub m: u32,
    pub r: u32,
}

impl ResonanceLabel {
    /// Number of cat legs / rotational symmetry order `(1 + r)n`.
    pub fn legs(&self) -> u32 {
        (1 + self.r) * self.n
    }
}

impl fmt::Display for ResonanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.n, self.m)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn make_resonance(n: u32, m: u32) -> Result<ResonanceLabel, ParamError> {
    if n == 0 || m == 0 {
        return Err(ParamError::NonPositiveOrder(n, m));
    }
    if gcd(n, m) != 1 {
        return Err(ParamError::NotCoprime(n, m));
    }
    Ok(ResonanceLabel { n, m, r: (n + m) % 2 })
}

/// `δ = 1 − (m/n)·ν̃_d`.
pub fn detuning(label: ResonanceLabel, frame: &SymmetricFrame) -> f64 {
    1.0 - label.m as f64 / label.n as f64 * frame.nu_d_tilde
}

pub fn normalize(circuit: &PhysicalCircuit, q_tilde: Quality) -> Result<NormalizedModel, ParamError> {
    let c = circuit;
    for (name, v) in [("E_C", c.E_C), ("E_L", c.E_L), ("E_J", c.E_J), ("omega_d", c.omega_d)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(ParamError::NonPositiveEnergy(format!("{name} must be > 0, got {v}")));
        }
    }
    if !(c.C_g >= 0.0) || !c.C_g.is_finite() {
        return Err(ParamError::NonPositiveEnergy(format!("C_g must be >= 0, got {}", c.C_g)));
    }
    if !c.V_d_bar.is_finite() {
        return Err(ParamError::NonPositiveEnergy("V_d_bar must be finite".into()));
    }
    q_tilde.check()?;
    let nu_d = HBAR * c.omega_d / (8.0 * c.E_C * c.E_L).sqrt();
    let ratio = c.V_d_bar * c.C_g / ELEMENTARY_CHARGE;
    let model = normalized_from_ratios(c.E_J / c.E_L, c.E_C / c.E_L, nu_d, ratio, q_tilde)?;
    Ok(model)
}

/// Normalization from dimensionless ratios `E_J/E_L`, `E_C/E_L`, `ν_d` and
/// `C_g V̄_d / e`; the physical constants cancel out of every quantity.
pub fn normalized_from_ratios(
    ej_over_el: f64,
    ec_over_el: f64,
    nu_d: f64,
    cg_vd_over_e: f64,
    q_tilde: Quality,
) -> Result<NormalizedModel, ParamError> {
    if (nu_d - 1.0).abs() < POLE_GUARD {
        return Err(ParamError::PoleAtResonance(nu_d));
    }
    let lambda_sq = (2.0 * ec_over_el).sqrt();
    Ok(NormalizedModel {
        beta: ej_over_el,
        lambda: lambda_sq.sqrt(),
        nu_d,
        xi_d: cg_vd_over_e * lambda_sq * nu_d / (1.0 - nu_d * nu_d),
        q_tilde,
    })
}

pub fn to_symmetric_frame(model: &NormalizedModel) -> Result<SymmetricFrame, ParamError> {
    model.q_tilde.check()?;
    let Quality::Finite(q) = model.q_tilde else {
        return Ok(SymmetricFrame {
            beta_tilde: model.beta,
            nu_d_tilde: model.nu_d,
            kappa: 0.0,
            xi_d: model.xi_d,
            s_scale: 1.0,
        });
    };
    let one_minus = 1.0 - model.q_tilde.inv_four_q_sq();
    let s = one_minus.sqrt();
    Ok(SymmetricFrame {
        beta_tilde: model.beta / one_minus,
        nu_d_tilde: model.nu_d / s,
        kappa: 1.0 / (2.0 * q * s),
        xi_d: model.xi_d,
        s_scale: s,
    })
}

/// Config block holding either the normalized keys or the physical circuit.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ModelConfig {
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub nu_d: Option<f64>,
    pub xi_d: Option<f64>,
    pub q_tilde: Option<Quality>,
    pub E_C: Option<f64>,
    pub E_L: Option<f64>,
    pub E_J: Option<f64>,
    pub C_g: Option<f64>,
    pub V_d_bar: Option<f64>,
    pub omega_d: Option<f64>,
}

impl ModelConfig {
    /// Resolves the block into a validated model. Exactly one of the two key
    /// sets must be present; `q_tilde` defaults to infinity.
    pub fn resolve(&self) -> Result<NormalizedModel, ParamError> {
        let q_tilde = self.q_tilde.unwrap_or(Quality::Infinite);
        let normalized = [
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("nu_d", self.nu_d),
            ("xi_d", self.xi_d),
        ];
        let physical = [
            ("E_C", self.E_C),
            ("E_L", self.E_L),
            ("E_J", self.E_J),
            ("C_g", self.C_g),
            ("V_d_bar", self.V_d_bar),
            ("omega_d", self.omega_d),
        ];
        let any_norm = normalized.iter().any(|(_, v)| v.is_some());
        let any_phys = physical.iter().any(|(_, v)| v.is_some());
        let missing = |keys: &[(&str, Option<f64>)]| -> Result<(), ParamError> {
            match keys.iter().find(|(_, v)| v.is_none()) {
                Some((k, _)) => Err(ParamError::Config(format!("missing key '{k}'"))),
                None => Ok(()),
            }
        };
        match (any_norm, any_phys) {
            (true, true) => Err(ParamError::Config(
                "both normalized (beta, lambda, nu_d, xi_d) and physical (E_C, ...) keys given; use exactly one block".into(),
            )),
            (false, false) => Err(ParamError::Config(
                "no model given: expected keys beta, lambda, nu_d, xi_d or E_C, E_L, E_J, C_g, V_d_bar, omega_d".into(),
            )),
            (true, false) => {
                missing(&normalized)?;
                let m = NormalizedModel {
                    beta: self.beta.unwrap(),
                    lambda: self.lambda.unwrap(),
                    nu_d: self.nu_d.unwrap(),
                    xi_d: self.xi_d.unwrap(),
                    q_tilde,
                };
                m.validate()?;
                Ok(m)
            }
            (false, true) => {
                missing(&physical)?;
                let c = PhysicalCircuit {
                    E_C: self.E_C.unwrap(),
                    E_L: self.E_L.unwrap(),
                    E_J: self.E_J.unwrap(),
                    C_g: self.C_g.unwrap(),
                    V_d_bar: self.V_d_bar.unwrap(),
                    omega_d: self.omega_d.unwrap(),
                };
                normalize(&c, q_tilde)
            }
        }
    }
}

/// Parses a TOML document consisting of a single model block.
pub fn load_model_config(text: &str) -> Result<NormalizedModel, ParamError> {
    let cfg: ModelConfig = toml::from_str(text).map_err(|e| ParamError::Config(e.to_string()))?;
    cfg.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(beta: f64, nu_d: f64, q: Quality) -> NormalizedModel {
        NormalizedModel { beta, lambda: 0.2, nu_d, xi_d: 1.7, q_tilde: q }
    }

    #[test]
    fn normalization_ratios() {
        let el = 1e-24;
        let base = PhysicalCircuit {
            E_C: 0.3 * el,
            E_L: el,
            E_J: el,
            C_g: 0.0,
            V_d_bar: 0.0,
            omega_d: 1e9,
        };
        assert_eq!(normalize(&base, Quality::Infinite).unwrap().beta, 1.0);
        let half = PhysicalCircuit { E_C: 0.5 * el, ..base };
        assert!((normalize(&half, Quality::Infinite).unwrap().lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xi_at_nu_two() {
        let m = normalized_from_ratios(1.0, 0.5, 2.0, 1.0, Quality::Infinite).unwrap();
        assert!((m.xi_d + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn xi_sign_flips_across_pole() {
        let below = normalized_from_ratios(1.0, 0.5, 0.9, 1.0, Quality::Infinite).unwrap();
        let above = normalized_from_ratios(1.0, 0.5, 1.1, 1.0, Quality::Infinite).unwrap();
        assert!(below.xi_d > 0.0 && above.xi_d < 0.0);
    }

    #[test]
    fn physical_circuit_through_si_constants() {
        let el: f64 = 2e-24;
        let ec = 0.5 * el;
        let omega_d = 2.0 * (8.0 * ec * el).sqrt() / HBAR;
        let c = PhysicalCircuit {
            E_C: ec,
            E_L: el,
            E_J: 0.5 * el,
            C_g: ELEMENTARY_CHARGE,
            V_d_bar: 1.0,
            omega_d,
        };
        let m = normalize(&c, Quality::Finite(10.0)).unwrap();
        assert!((m.nu_d - 2.0).abs() < 1e-12);
        assert!((m.xi_d + 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.beta, 0.5);
    }

    #[test]
    fn pole_guard() {
        assert!(matches!(
            normalized_from_ratios(1.0, 0.5, 1.0 + 1e-10, 1.0, Quality::Infinite),
            Err(ParamError::PoleAtResonance(_))
        ));
    }

    #[test]
    fn invalid_circuit() {
        let c = PhysicalCircuit { E_C: 0.0, E_L: 1.0, E_J: 1.0, C_g: 0.0, V_d_bar: 0.0, omega_d: 1.0 };
        assert!(matches!(normalize(&c, Quality::Infinite), Err(ParamError::NonPositiveEnergy(_))));
    }

    #[test]
    fn infinite_q_frame_is_identity() {
        let f = to_symmetric_frame(&model(0.5, 3.1, Quality::Infinite)).unwrap();
        assert_eq!((f.beta_tilde, f.nu_d_tilde, f.kappa, f.s_scale), (0.5, 3.1, 0.0, 1.0));
    }

    #[test]
    fn finite_q_frame_values() {
        // 40-digit reference values for Q̃ = 10, β = 0.5.
        let f = to_symmetric_frame(&model(0.5, 3.0, Quality::Finite(10.0))).unwrap();
        assert!((f.kappa - 0.050_062_617_432_175_887).abs() < 1e-15);
        assert!((f.beta_tilde - 0.501_253_132_832_080_2).abs() < 1e-15);
        assert!((f.nu_d_tilde - 3.0 * 1.001_252_348_643_517_7).abs() < 1e-14);
    }

    #[test]
    fn overdamped() {
        assert!(matches!(
            to_symmetric_frame(&model(0.5, 3.0, Quality::Finite(0.5))),
            Err(ParamError::OverdampedRegime(_))
        ));
    }

    #[test]
    fn resonance_labels() {
        assert_eq!(make_resonance(3, 1).unwrap().r, 0);
        assert_eq!(make_resonance(2, 1).unwrap().r, 1);
        assert_eq!(make_resonance(4, 2), Err(ParamError::NotCoprime(4, 2)));
        assert_eq!(make_resonance(2, 1).unwrap().legs(), 4);
    }

    #[test]
    fn detuning_examples() {
        let l31 = make_resonance(3, 1).unwrap();
        let l21 = make_resonance(2, 1).unwrap();
        let fr = |nu| SymmetricFrame::from_tilde(0.5, 0.0, 1.7, nu);
        assert_eq!(detuning(l31, &fr(3.0)), 0.0);
        assert!((detuning(l31, &fr(3.2985)) + 0.0995).abs() < 1e-12);
        assert!((detuning(l21, &fr(1.96)) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn config_blocks() {
        let m = load_model_config("beta = 0.5\nlambda = 0.2\nnu_d = 3.2985\nxi_d = 1.7\nq_tilde = \"inf\"\n").unwrap();
        assert!(m.q_tilde.is_infinite());
        let m = load_model_config("beta = 0.5\nlambda = 0.2\nnu_d = 3.0\nxi_d = 1.7\nq_tilde = 25\n").unwrap();
        assert_eq!(m.q_tilde, Quality::Finite(25.0));
        let err = load_model_config("beta = 0.5\nlambda = 0.2\nxi_d = 1.7\n").unwrap_err();
        assert!(err.to_string().contains("nu_d"), "{err}");
        let err = load_model_config("beta = 0.5\nlambda = 0.2\nnu_d = 3.0\nxi_d = 1.7\nE_C = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
        assert!(load_model_config("beta = 0.5\nlambda = 0.2\nnu_d = 3.0\nxi_d = 1.7\nq_tilde = 0.4\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn frame_round_trip(beta in 0.0f64..3.0, nu in 0.1f64..6.0, q in 0.5001f64..1e6) {
                let m = model(beta, nu, Quality::Finite(q));
                let back = to_symmetric_frame(&m).unwrap().to_model(m.lambda);
                prop_assert!((back.beta - beta).abs() <= 1e-12 * beta.max(1e-300));
                prop_assert!((back.nu_d - nu).abs() <= 1e-12 * nu);
                let Quality::Finite(qb) = back.q_tilde else { panic!() };
                prop_assert!((qb - q).abs() <= 1e-12 * q);
            }

            #[test]
            fn kappa_decreases_with_q(q in 0.51f64..1e4, dq in 1e-3f64..10.0) {
                let k = |q| to_symmetric_frame(&model(0.5, 3.0, Quality::Finite(q))).unwrap();
                let (a, b) = (k(q), k(q + dq));
                prop_assert!(b.kappa < a.kappa);
                prop_assert!(a.beta_tilde >= 0.5 && a.nu_d_tilde >= 3.0);
            }
        }
    }
}

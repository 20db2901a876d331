//! Closed-form regularity criteria: contraction, invariant disk,
//! exclusion of period doubling and of subharmonics.

use crate::params::{to_symmetric_frame, NormalizedModel, ParamError, Quality, SymmetricFrame};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Rounded-down matching constant used by the published β bounds.
pub const PD_CONSTANT: f64 = 0.53;

/// Upper limit reported for `pd_excluded_up_to` when β = 0.
pub const PD_ORDER_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("quality factor {0} is at or below 1/2 (overdamped)")]
    OverdampedRegime(f64),
    #[error("no finite invariant disk without dissipation")]
    NoDissipation,
    #[error("|delta_bar| = {delta_bar} exceeds nu/(2n) = {limit}")]
    DeltaBarOutOfRange { delta_bar: f64, limit: f64 },
    #[error("root finder failed to bracket a solution")]
    NoRoot,
    #[error("subharmonic order must be >= {min}, got {n}")]
    InvalidOrder { n: u32, min: u32 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Zone {
    /// Contracting: a single asymptotic limit cycle.
    Contracting,
    /// Period doubling excluded up to the requested subharmonic order.
    PeriodDoublingExcluded,
    Both,
    Unguaranteed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub contracting: bool,
    pub pd_excluded_up_to: u64,
    /// `None` when κ = 0.
    pub invariant_radius: Option<f64>,
    pub beta_bound_contraction: f64,
    pub beta_bound_pd: f64,
    pub beta_bound_combined: f64,
    pub delta_bar_used: f64,
    pub tau_bar: f64,
    pub no_minusone: bool,
    pub subharmonic_excluded: bool,
    pub zone: Zone,
}

/// `√(1 − 1/4Q̃²)/Q̃`; zero for Q̃ = ∞.
pub fn contraction_bound(q_tilde: Quality) -> Result<f64, BoundsError> {
    match q_tilde {
        Quality::Infinite => Ok(0.0),
        Quality::Finite(q) if q <= 0.5 => Err(BoundsError::OverdampedRegime(q)),
        Quality::Finite(q) => Ok((1.0 - 1.0 / (4.0 * q * q)).sqrt() / q),
    }
}

pub fn invariant_disk_radius(frame: &SymmetricFrame) -> Result<f64, BoundsError> {
    if frame.kappa <= 0.0 {
        return Err(BoundsError::NoDissipation);
    }
    Ok(frame.beta_tilde / frame.kappa)
}

/// `exp(4πnβ̃/ν̃) − 1 < 2cos(πnδ̄/ν̃)`.
pub fn no_minusone_criterion(beta_tilde: f64, nu_d_tilde: f64, n: u32, delta_bar: f64) -> Result<bool, BoundsError> {
    if n == 0 {
        return Err(BoundsError::InvalidOrder { n, min: 1 });
    }
    let limit = nu_d_tilde / (2.0 * n as f64);
    if delta_bar.abs() > limit {
        return Err(BoundsError::DeltaBarOutOfRange { delta_bar, limit });
    }
    let a = PI * n as f64 / nu_d_tilde;
    Ok((4.0 * a * beta_tilde).exp_m1() < 2.0 * (a * delta_bar).cos())
}

/// True when `[(1−β̃)/ν̃, (1+β̃)/ν̃]` contains no nonzero multiple of `1/n`.
pub fn subharmonic_exclusion(beta_tilde: f64, nu_d_tilde: f64, n: u32) -> Result<bool, BoundsError> {
    if n < 2 {
        return Err(BoundsError::InvalidOrder { n, min: 2 });
    }
    let n = n as f64;
    let lo = (1.0 - beta_tilde) / nu_d_tilde * n;
    let hi = (1.0 + beta_tilde) / nu_d_tilde * n;
    let first = lo.ceil().max(1.0);
    Ok(first > hi)
}

/// Coefficient `c` solving `e^{2c} − 1 = 2cos(c/2)`; the optimal
/// `δ̄ = c ν̃ / 2πn`.
pub fn optimal_coefficient() -> Result<f64, BoundsError> {
    bisect(|c| (2.0 * c).exp_m1() - 2.0 * (0.5 * c).cos(), 0.0, PI)
}

pub fn optimal_delta_bar(n: u32, nu_d_tilde: f64) -> Result<f64, BoundsError> {
    if n < 2 {
        return Err(BoundsError::InvalidOrder { n, min: 2 });
    }
    Ok(optimal_coefficient()? * nu_d_tilde / (2.0 * PI * n as f64))
}

/// `(0.53/τ̄)√(1 − 1/4Q²_min)`.
pub fn pd_exclusion_bound(tau_bar: f64, q_min: Quality) -> Result<f64, BoundsError> {
    if let Quality::Finite(q) = q_min {
        if q <= 0.5 {
            return Err(BoundsError::OverdampedRegime(q));
        }
    }
    Ok(PD_CONSTANT / tau_bar * (1.0 - q_min.inv_four_q_sq()).sqrt())
}

/// The bound at which the contraction and period-doubling zones just overlap.
pub fn combined_bound(tau_bar: f64) -> f64 {
    let a = PD_CONSTANT / tau_bar;
    a * (1.0 - 0.25 * a * a).sqrt()
}

/// Evaluates every criterion at the model's own drive frequency, with
/// `τ̄ = 2πn̄/ν_d`.
pub fn classify_point(model: &NormalizedModel, n_bar: u32) -> Result<RegularityReport, BoundsError> {
    if n_bar < 2 {
        return Err(BoundsError::InvalidOrder { n: n_bar, min: 2 });
    }
    let frame = to_symmetric_frame(model)?;
    let beta = model.beta;
    let q = model.q_tilde;
    let s = (1.0 - q.inv_four_q_sq()).sqrt();
    let tau_bar = 2.0 * PI * n_bar as f64 / model.nu_d;

    let beta_bound_contraction = contraction_bound(q)?;
    let beta_bound_pd = pd_exclusion_bound(tau_bar, q)?;
    let contracting = beta == 0.0 || beta < beta_bound_contraction;

    let pd_excluded_up_to = if beta == 0.0 {
        PD_ORDER_CAP
    } else {
        // Largest n with β < 0.53·s·ν/(2πn).
        let x = PD_CONSTANT * s * model.nu_d / (2.0 * PI * beta);
        let mut n = x.floor();
        if n >= x {
            n -= 1.0;
        }
        (n.max(0.0) as u64).min(PD_ORDER_CAP)
    };

    let delta_bar_used = optimal_delta_bar(n_bar, frame.nu_d_tilde)?;
    let no_minusone = no_minusone_criterion(frame.beta_tilde, frame.nu_d_tilde, n_bar, delta_bar_used)?;
    let subharmonic_excluded = subharmonic_exclusion(frame.beta_tilde, frame.nu_d_tilde, n_bar)?;
    let pd = pd_excluded_up_to >= n_bar as u64;
    let zone = match (contracting, pd) {
        (true, true) => Zone::Both,
        (true, false) => Zone::Contracting,
        (false, true) => Zone::PeriodDoublingExcluded,
        (false, false) => Zone::Unguaranteed,
    };
    Ok(RegularityReport {
        contracting,
        pd_excluded_up_to,
        invariant_radius: invariant_disk_radius(&frame).ok(),
        beta_bound_contraction,
        beta_bound_pd,
        beta_bound_combined: combined_bound(tau_bar),
        delta_bar_used,
        tau_bar,
        no_minusone,
        subharmonic_excluded,
        zone,
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64, BoundsError> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return Err(BoundsError::NoRoot);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 4.0 * f64::EPSILON * mid.abs() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::normalized_from_ratios;
    use proptest::prelude::*;

    const C_OPT: f64 = 0.537_208_382_920_459;

    #[test]
    fn contraction_examples() {
        let b = |q| contraction_bound(Quality::Finite(q)).unwrap();
        assert!((b(1.0) - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!((b(10.0) - 0.099_874_921_777_190_9).abs() < 1e-12);
        assert!(b(1e8) < 1e-7);
        assert_eq!(contraction_bound(Quality::Infinite).unwrap(), 0.0);
        assert!(matches!(contraction_bound(Quality::Finite(0.5)), Err(BoundsError::OverdampedRegime(_))));
    }

    #[test]
    fn invariant_disk() {
        let f = SymmetricFrame::from_tilde(0.5, 0.05, 1.0, 3.0);
        assert!((invariant_disk_radius(&f).unwrap() - 10.0).abs() < 1e-12);
        let f = SymmetricFrame::from_tilde(0.5, 0.0, 1.0, 3.0);
        assert_eq!(invariant_disk_radius(&f), Err(BoundsError::NoDissipation));
    }

    #[test]
    fn no_minusone_examples() {
        assert!(no_minusone_criterion(0.0, 3.0, 3, 0.49).unwrap());
        // At the maximal δ̄ the right side vanishes.
        assert!(!no_minusone_criterion(1e-6, 3.0, 3, 0.5).unwrap());
        // exp(0.08π) − 1 = 0.2857 < 2cos(0.2π) = 1.618
        assert!(no_minusone_criterion(0.02, 3.0, 3, 0.2).unwrap());
        assert!(!no_minusone_criterion(0.2, 3.0, 3, 0.2).unwrap());
        assert!(matches!(
            no_minusone_criterion(0.0, 3.0, 3, 0.6),
            Err(BoundsError::DeltaBarOutOfRange { .. })
        ));
    }

    #[test]
    fn subharmonic_examples() {
        assert!(!subharmonic_exclusion(0.01, 3.0, 3).unwrap());
        assert!(subharmonic_exclusion(0.01, 2.8, 3).unwrap());
        assert!(subharmonic_exclusion(0.0, 3.0 / 1.000_1, 3).unwrap());
        assert!(subharmonic_exclusion(0.0, 3.0, 3).is_ok_and(|v| !v));
    }

    #[test]
    fn delta_bar_constant() {
        let c = optimal_coefficient().unwrap();
        assert!((c - C_OPT).abs() < 1e-12);
        for n in [2, 3, 5] {
            let d = optimal_delta_bar(n, 2.2).unwrap();
            assert!((d * 2.0 * PI * n as f64 / 2.2 - 0.537).abs() < 0.002);
        }
        assert!((optimal_delta_bar(3, 3.0).unwrap() - 0.085_499_369_6).abs() < 1e-9);
        assert!(optimal_delta_bar(1, 3.0).is_err());
    }

    #[test]
    fn beta_bounds() {
        let tau = 2.0 * PI;
        assert!((pd_exclusion_bound(tau, Quality::Infinite).unwrap() - 0.084_352_119_8).abs() < 1e-9);
        assert!((combined_bound(tau) - 0.084_277_062_8).abs() < 1e-9);
        assert!(pd_exclusion_bound(1e9, Quality::Infinite).unwrap() < 1e-9);
    }

    #[test]
    fn classify_examples() {
        let m = normalized_from_ratios(0.05, 0.02, 3.0, 1.0, Quality::Finite(5.0)).unwrap();
        assert!(classify_point(&m, 3).unwrap().contracting);

        let m = normalized_from_ratios(0.5, 0.02, 3.0, 1.0, Quality::Finite(1e6)).unwrap();
        let r = classify_point(&m, 3).unwrap();
        assert!(!r.contracting);
        assert!(r.pd_excluded_up_to < 2);
        assert_eq!(r.zone, Zone::Unguaranteed);

        let m = normalized_from_ratios(0.0, 0.02, 2.9, 1.0, Quality::Infinite).unwrap();
        let r = classify_point(&m, 3).unwrap();
        assert!(r.contracting && r.no_minusone && r.subharmonic_excluded);
        assert_eq!(r.zone, Zone::Both);
        assert_eq!(r.invariant_radius, None);
    }

    #[test]
    fn pd_order_matches_bound() {
        let m = normalized_from_ratios(0.02, 0.02, 3.0, 1.0, Quality::Infinite).unwrap();
        let r = classify_point(&m, 3).unwrap();
        let n = r.pd_excluded_up_to;
        let bound = |n: u64| pd_exclusion_bound(2.0 * PI * n as f64 / 3.0, Quality::Infinite).unwrap();
        assert!(0.02 < bound(n) && 0.02 >= bound(n + 1));
    }

    proptest! {
        #[test]
        fn delta_bar_homogeneous(nu in 0.5f64..5.0, c in 0.1f64..10.0, n in 2u32..8) {
            let a = optimal_delta_bar(n, nu).unwrap();
            let b = optimal_delta_bar(n, c * nu).unwrap();
            prop_assert!((b - c * a).abs() < 1e-12 * b.abs().max(1.0));
        }

        #[test]
        fn bounds_monotone(t1 in 0.5f64..50.0, dt in 0.01f64..10.0, q in 0.6f64..100.0) {
            let q = Quality::Finite(q);
            prop_assert!(pd_exclusion_bound(t1 + dt, q).unwrap() < pd_exclusion_bound(t1, q).unwrap());
            prop_assert!(combined_bound(t1 + dt) < combined_bound(t1));
        }

        #[test]
        fn contraction_decreasing_above_inv_sqrt2(q in 0.75f64..100.0, dq in 0.01f64..10.0) {
            let a = contraction_bound(Quality::Finite(q)).unwrap();
            let b = contraction_bound(Quality::Finite(q + dq)).unwrap();
            prop_assert!(b < a);
        }
    }
}

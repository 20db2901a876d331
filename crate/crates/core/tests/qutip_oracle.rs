//! Steady state of the (3:1) drive point frozen from an independent QuTiP
//! Floquet–Markov solve.

use josc::params::{normalized_from_ratios, Quality};
use josc::pipeline::{run_floquet_markov, PipelineSettings};
use josc::special::bessel_j;

const N_OCC: f64 = 5.290186;
const CAT_POPULATION: f64 = 0.28124;
const CAT_PHOTONS: f64 = 22.856;

#[test]
fn three_photon_point_matches_qutip() {
    let nu = 3.0 * (1.0 + 0.25 * bessel_j(0, 1.7));
    let mut m = normalized_from_ratios(0.5, 0.5 * 0.2f64.powi(4), nu, 1.0, Quality::Infinite).unwrap();
    m.xi_d = 1.7;
    let out = run_floquet_markov(&m, &PipelineSettings { dim: 100, ..Default::default() }).unwrap();
    assert!((out.steady.n_occ - N_OCC).abs() < 1e-5, "{}", out.steady.n_occ);
    for &r in out.steady.dominant_modes().iter().take(3) {
        assert!((out.steady.probabilities[r] - CAT_POPULATION).abs() < 1e-5);
        assert!((out.decomp.mean_photons[r] - CAT_PHOTONS).abs() < 1e-3);
    }
}

//! Classical and quantum analysis of a harmonically driven, weakly damped
//! Josephson oscillator.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: parameter tuples and the exact changes of variables.
//! - [`classical`]: equations of motion, Poincaré maps, periodic orbits, chaos diagnostics.
//! - [`quantum`]: truncated Fock space, one-period propagator, Floquet modes, cats, phase space.
//! - [`markov`]: Floquet–Markov golden-rule rates and the asymptotic mixture.
//! - [`averaging`]: the first-order averaged (n:m) model and its bifurcation structure.
//! - [`bounds`]: closed-form regularity criteria.
//! - [`pipeline`]: one drive point from Hamiltonian to steady state.
//!
//! [`special`] and [`ode`] hold the Bessel functions and the adaptive integrator.

pub mod averaging;
pub mod bounds;
pub mod classical;
pub mod markov;
pub mod ode;
pub mod params;
pub mod pipeline;
pub mod quantum;
pub mod special;

pub use num_complex::Complex64;

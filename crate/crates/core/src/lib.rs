//! Ground states and low spectra of the Dicke model, its two-oscillator
//! Holstein–Primakoff limit and the quantum Rabi model, together with the
//! closed forms that tie polariton frequency shifts to the squeezing of the
//! bare light and matter modes.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: truncated Fock / collective-spin spaces and sparse operators.
//! - [`models`]: the Hamiltonians, built from [`models::ModelParams`].
//! - [`analytic`]: thermodynamic-limit closed forms (squeezing parameters,
//!   physical frequencies, virtual excitation counts, Gaussian covariances).
//! - [`solver`]: deterministic thick-restart Lanczos with a dense fallback and
//!   adaptive Fock cutoff selection.
//! - [`observables`]: expectation values, covariance matrices, partial traces
//!   and Husimi Q grids.
//! - [`sweep_fit`]: parameter sweeps and the power-law finite-size fit.
//!
//! Quadratures follow `x = (a + a†)/√2`, `p = i(a† − a)/√2`, so the vacuum has
//! variance ½ in each.

pub mod analytic;
pub mod error;
pub mod hilbert;
pub mod models;
pub mod observables;
pub mod solver;
pub mod sweep_fit;

pub use error::{Error, Result};

/// Tag written into every output header so that tables from different runs
/// can be compared.
pub const QUADRATURE_CONVENTION: &str =
    "x=(a+a^dag)/sqrt2, p=i(a^dag-a)/sqrt2, vacuum variance 1/2";

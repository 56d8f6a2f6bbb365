//! Spectral geometry laboratory for the Dirichlet Laplacian.
//!
//! The crate computes exact spectra and torsional rigidity of round balls
//! (via Bessel-function zeros and harmonic-polynomial multiplicities),
//! numerically solves eigenvalues and torsion on nearly circular planar
//! domains with a structured P1 finite-element solver, evaluates Hadamard
//! shape derivatives at the disk, and audits a catalogue of quantitative
//! spectral inequalities over randomized domain families.
//!
//! Entry points:
//! - [`ball_spectrum`]: exact ball eigenvalue enumeration and Bessel machinery,
//! - [`geometry`]: nearly circular domains from Fourier boundary profiles,
//! - [`dirichlet_solver`]: FEM eigenvalue/torsion solves with error control,
//! - [`shape_calculus`]: first and second shape derivatives at the disk,
//! - [`inequality_audit`]: inequality checks with explicit error budgets,
//! - [`spectral_sums`]: heat traces, cluster partitions, weighted tail sums,
//! - [`optimizer`]: Hessian scans and stability thresholds of penalized
//!   torsion functionals.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod ball_spectrum;
pub mod bessel;
pub mod dirichlet_solver;
pub mod geometry;
pub mod inequality_audit;
pub mod optimizer;
pub mod shape_calculus;
pub mod spectral_sums;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    // omega_n = pi^{n/2} / Gamma(n/2 + 1)
    let half = n as f64 / 2.0;
    (half * std::f64::consts::PI.ln() - bessel::ln_gamma(half + 1.0)).exp()
}

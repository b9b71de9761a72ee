//! Weighted extremal functions from Bergman kernel asymptotics, and Monte
//! Carlo checks of zero distributions of random polynomials built on
//! orthonormal bases.
//!
//! The pipeline runs bottom-up: [`polycore`] enumerates monomials and
//! evaluates them in log form, [`weighted_sets`] discretizes `(K, Q, τ)`,
//! [`orthobasis`] orthonormalizes, [`extremal`] turns the Bergman kernel
//! diagonal into `V_{K,Q}` estimates, [`ensembles`] and [`zeros`] build and
//! factor random polynomials, and [`montecarlo`] runs seeded experiments.

pub mod ensembles;
pub mod error;
pub mod extremal;
pub mod montecarlo;
pub mod orthobasis;
pub mod polycore;
pub mod quadrature;
pub mod weighted_sets;
pub mod zeros;

pub use error::{Error, Result};

/// Fixed 17-significant-digit formatting used for every numeric CSV field.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

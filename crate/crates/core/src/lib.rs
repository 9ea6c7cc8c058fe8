//! Desk-scale simulation and numerical validation of risk bounds for
//! empirical risk minimization under margin conditions.
//!
//! The crate builds finite-support classification problems end to end:
//!
//! - [`domain`] — finite joint laws, Bayes classifiers, margin and exact
//!   excess loss;
//! - [`classes`] — explicit VC classes with exact shattering, dimension,
//!   combinatorial entropy and richness queries;
//! - [`lowerlab`] — adversarial distribution families, closed-form
//!   Hellinger/KL divergences with brute-force oracles, Hamming packing
//!   and the multiple-testing bound;
//! - [`erm`] — deterministic sampling, (rho-)empirical risk minimization,
//!   Monte Carlo excess-risk estimation and empirical process suprema;
//! - [`bounds`] — every upper/lower risk-bound formula, the localized
//!   fixed-point solver and maximal-inequality evaluators;
//! - [`boundary`] — the binary-image regression experiment: boundary
//!   fragments, histogram ERM and Hoelder boundary generation.

pub(crate) mod bits;
pub mod boundary;
pub mod bounds;
pub mod classes;
pub mod domain;
pub mod erm;
pub mod error;
pub mod lowerlab;

pub use error::{Error, Result};

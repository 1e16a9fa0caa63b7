//! Random translation-invariant frustration-free spin chains and trees.
//!
//! The crate samples Haar-random low-rank interactions ([`haar`]), builds the
//! chain and tree Hamiltonians they generate ([`model`]), computes spectral
//! gaps densely or with Lanczos ([`spectral`]), evaluates the three-site
//! finite-size gap certificates ([`certificate`]), evaluates spherical-cap
//! measures and the probability lower bounds built from them ([`capgeom`]),
//! and runs seeded Monte Carlo experiments ([`harness`]).

pub mod error;
pub mod haar;
pub mod model;
pub mod spectral;
pub mod capgeom;
pub mod certificate;
pub mod harness;

pub use error::{Error, Result};

//! Computational toolkit for higher-dimensional noncommutative tori.
//!
//! Pfaffian invariants of skew-symmetric phase matrices, the Schur-complement
//! flow and its projection-existence conditions, super-increasing example
//! families, finite-dimensional representations with functional calculus, and
//! the Rieffel/Bott/four-torus projection constructions built on top of them.

pub mod appendix4d;
pub mod harness;
pub mod ncrep;
pub mod projections;
pub mod scalar;
pub mod schurflow;
pub mod skewmat;
pub mod superinc;

mod error;

pub use error::{Error, Result};

//! Grand-canonical Bose gas in its Feynman–Kac path representation.
//!
//! Configurations come in three encodings ([`representations`]): bridge sets,
//! rooted loops and marked points. [`hamiltonians`] evaluates their energies,
//! [`samplers`] draws them, [`statistics`] measures them and [`verification`]
//! runs the numerical consistency checks.

pub mod error;
pub mod geometry;
pub mod hamiltonians;
pub mod interactions;
pub mod representations;
pub mod rng;
pub mod samplers;
pub mod statistics;
pub mod trajectories;
pub mod verification;

pub use error::{Error, ErrorKind, Result};

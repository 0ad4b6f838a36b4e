//! Spectral-gap toolkit for t-order moment superoperators of permutationally
//! invariant random quantum circuits.

pub mod circuit_mc;
pub mod convergence;
pub mod error;
pub mod gate_averaging;
pub mod mean_field;
pub mod moment_space;
pub mod symmetric_sector;

pub use error::{Error, Result};

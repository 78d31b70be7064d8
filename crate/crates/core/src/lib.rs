//! Reconstruction of sine-Gordon-type field equations `u_xx - u_tt = F(u)`
//! from the Schrödinger operator that governs small oscillations around their
//! kink, with forward checks of the result.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eigensolver;
pub mod error;
pub mod grid;
pub mod interp;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod potentials;
pub mod reconstruct;
pub mod simulate;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, SampledFunction};
pub use potentials::{catalog_reference, Potential, PotentialKind};

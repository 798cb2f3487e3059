//! Quantum-limited discrimination of one versus two incoherent point sources
//! and super-resolved estimation of their separation, using a two-mode
//! interferometer model.

pub mod error;
pub mod inference;
pub mod measurement;
pub mod quantum;
pub mod scene;
pub mod simulate;

pub use error::{Error, Result};

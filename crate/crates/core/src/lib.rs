//! Numerical laboratory for discrete Schrödinger operators `-Δ + V` on Z^d
//! with sparse potentials.

pub mod error;
pub mod fit;
pub mod green;
pub mod hamlab;
pub mod lattice;
pub mod linalg;
pub mod localization;
pub mod scattering;

pub use error::{LabError, Result};
pub use green::{DecayFit, GreenConfig, GreenKernel};
pub use hamlab::{participation_ratio, BoxOperator};
pub use lattice::{Boundary, LatticeBox, LatticeField, Potential, Site};

/// Library version recorded in experiment outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

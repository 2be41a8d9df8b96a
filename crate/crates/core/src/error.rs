use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::Site;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field lives on a different box than the operator")]
    ShapeMismatch,

    #[error("spectral parameter {z} lies within {distance:e} of the spectrum [0, {upper}]")]
    SpectralParameter {
        z: Complex64,
        distance: f64,
        upper: f64,
    },

    #[error("{what} did not reach accuracy {target:e} (achieved {achieved:e})")]
    Accuracy {
        what: &'static str,
        target: f64,
        achieved: f64,
    },

    #[error("resonance at site {site}: |1 + G V| = {denominator:e}")]
    Resonance { site: Site, denominator: f64 },

    #[error("no bound state: 1 + beta G(lambda; 0) has no sign change on ({lower}, {upper}) for beta = {beta}")]
    NoBoundState { beta: f64, lower: f64, upper: f64 },

    #[error("{what} failed to converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear solver breakdown: {0}")]
    Breakdown(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("wavefront reaches the box boundary: needs radius {required}, box has {available}")]
    Wavefront { required: f64, available: i64 },

    #[error("level curve is not regular: {0}")]
    Regularity(String),

    #[error("zero vector")]
    ZeroVector,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

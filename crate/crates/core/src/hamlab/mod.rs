//! Finite-box Hamiltonians: eigenpairs in spectral windows, Stieltjes
//! transforms of spectral measures, and localization diagnostics.

mod eigen;
mod operator;

use num_complex::Complex64;

pub use eigen::{
    dense_eigenvalues, eigs_in_window, eigs_in_window_with, EigenConfig, EigenMethod, EigenPair,
    WindowSpectrum,
};
pub use operator::BoxOperator;

use crate::error::{LabError, Result};
use crate::lattice::LatticeField;
use crate::linalg::{cocg, KrylovOutcome};

/// Imaginary offset given to real spectral parameters in [`stieltjes`].
pub const REAL_AXIS_OFFSET: f64 = 1e-8;

/// Relative residual required of the resolvent solve.
pub const STIELTJES_TOLERANCE: f64 = 1e-10;

/// `m(z) = <(H - z)^{-1} φ, φ>`, the Cauchy transform of the spectral
/// measure of `φ`.
///
/// Real `z` is moved to `z + i·1e-8`.
pub fn stieltjes(op: &BoxOperator, phi: &LatticeField, z: Complex64) -> Result<Complex64> {
    stieltjes_with_outcome(op, phi, z).map(|(m, _)| m)
}

pub fn stieltjes_with_outcome(
    op: &BoxOperator,
    phi: &LatticeField,
    z: Complex64,
) -> Result<(Complex64, KrylovOutcome)> {
    if phi.lattice() != op.lattice() {
        return Err(LabError::ShapeMismatch);
    }
    let z = if z.im == 0.0 {
        Complex64::new(z.re, REAL_AXIS_OFFSET)
    } else {
        z
    };
    let apply = |x: &[Complex64], y: &mut [Complex64]| {
        op.apply_complex(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= z * xi;
        }
    };
    let max_iterations = (20 * op.len()).clamp(1000, 200_000);
    let (u, outcome) = cocg(apply, phi.values(), STIELTJES_TOLERANCE, max_iterations)?;
    let m = u
        .iter()
        .zip(phi.values())
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok((m, outcome))
}

/// `(sum |v|^2)^2 / sum |v|^4`, between 1 and the number of sites.
pub fn participation_ratio(v: &LatticeField) -> Result<f64> {
    let (s2, s4) = v.values().iter().fold((0.0, 0.0), |(a, b), x| {
        let p = x.norm_sqr();
        (a + p, b + p * p)
    });
    if !(s2 > 0.0) {
        return Err(LabError::ZeroVector);
    }
    Ok(s2 * s2 / s4)
}

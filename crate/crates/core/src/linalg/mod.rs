//! Small linear-algebra kernels not covered by `nalgebra`: banded inertia
//! counts and LU, a complex-symmetric Krylov solver, and Gauss-Legendre rules.

mod banded;
mod cocg;
mod gauss;

pub use banded::{BandLu, SymBand};
pub use cocg::{cocg, KrylovOutcome};
pub use gauss::gauss_legendre;

/// Modified Gram-Schmidt, applied twice. Returns `false` when a vector
/// collapses numerically.
pub(crate) fn orthonormalize(vectors: &mut [Vec<f64>]) -> bool {
    for i in 0..vectors.len() {
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = vectors.split_at_mut(i);
                let q = &head[j];
                let v = &mut tail[0];
                let proj: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= proj * qk;
                }
            }
        }
        let norm = vectors[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return false;
        }
        for x in vectors[i].iter_mut() {
            *x /= norm;
        }
    }
    true
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

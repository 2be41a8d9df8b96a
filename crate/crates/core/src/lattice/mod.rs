//! Sites, finite boxes, lattice fields, the free operator H0 = -Δ and its
//! symbol, potentials, and sparse-support generators.
//!
//! Distances and norms of sites are Euclidean throughout. Boxes are cubes in
//! the sup-norm and enumerate their sites lexicographically.

mod boxes;
mod field;
mod potential;
mod site;
mod support;

use std::ops::{AddAssign, Mul, SubAssign};

pub use boxes::{Boundary, LatticeBox};
pub use field::LatticeField;
pub use potential::Potential;
pub use site::Site;
pub use support::{
    item_seed, sample_potential, site_seed, sparse_support, sparseness_profile, thm1_condition_partial_sums,
    SparseRule, SparseSupport,
};

use crate::error::{LabError, Result};

/// The symbol `a(xi) = sum_j (2 - 2 cos xi_j)` of H0, without checks.
#[inline]
pub fn symbol(xi: &[f64]) -> f64 {
    xi.iter().map(|x| 2.0 - 2.0 * x.cos()).sum()
}

/// The symbol of H0 in dimension `dim`; the result lies in `[0, 4 dim]`.
pub fn symbol_eval(dim: usize, xi: &[f64]) -> Result<f64> {
    if xi.len() != dim {
        return Err(LabError::DimensionMismatch {
            expected: dim,
            got: xi.len(),
        });
    }
    Ok(symbol(xi))
}

/// `out = H0 u` on the box, for any scalar type closed under real scaling.
pub(crate) fn apply_h0_into<T>(lattice: &LatticeBox, u: &[T], out: &mut [T])
where
    T: Copy + AddAssign + SubAssign + Mul<f64, Output = T>,
{
    let dim = lattice.dim();
    let side = lattice.side();
    let periodic = lattice.boundary() == Boundary::Periodic;
    let diag = 2.0 * dim as f64;
    let strides: Vec<usize> = (0..dim).map(|a| lattice.stride(a)).collect();

    for (idx, slot) in out.iter_mut().enumerate() {
        let mut acc = u[idx] * diag;
        for &stride in &strides {
            let pos = (idx / stride) % side;
            if pos + 1 < side {
                acc -= u[idx + stride];
            } else if periodic {
                acc -= u[idx - (side - 1) * stride];
            }
            if pos > 0 {
                acc -= u[idx - stride];
            } else if periodic {
                acc -= u[idx + (side - 1) * stride];
            }
        }
        *slot = acc;
    }
}

/// `[H0 u](n) = sum_{|n-j|=1} (u(n) - u(j))` on the box of `u`.
pub fn apply_h0(u: &LatticeField) -> LatticeField {
    let mut out = LatticeField::zeros(*u.lattice());
    apply_h0_into(u.lattice(), u.values(), out.values_mut());
    out
}

/// `(H0 + V) u` on the box of `u`; potential values outside the box are ignored.
pub fn apply_h(u: &LatticeField, potential: &Potential) -> Result<LatticeField> {
    if potential.dim() != u.lattice().dim() {
        return Err(LabError::DimensionMismatch {
            expected: u.lattice().dim(),
            got: potential.dim(),
        });
    }
    let mut out = apply_h0(u);
    let lattice = *u.lattice();
    for (site, v) in potential.iter() {
        if let Some(idx) = lattice.index_of(site) {
            let add = u.values()[idx] * v;
            out.values_mut()[idx] += add;
        }
    }
    Ok(out)
}

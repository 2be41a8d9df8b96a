use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::lattice::{apply_h0_into, Boundary, LatticeBox, LatticeField, Potential};
use crate::linalg::SymBand;

/// `H = H0 + V` restricted to a finite box, applied matrix-free.
#[derive(Debug, Clone)]
pub struct BoxOperator {
    lattice: LatticeBox,
    potential: Potential,
    diagonal: Vec<f64>,
}

impl BoxOperator {
    pub fn new(lattice: LatticeBox, potential: Potential) -> Result<Self> {
        if potential.dim() != lattice.dim() {
            return Err(LabError::DimensionMismatch {
                expected: lattice.dim(),
                got: potential.dim(),
            });
        }
        let mut diagonal = vec![0.0; lattice.len()];
        for (site, v) in potential.iter() {
            if let Some(i) = lattice.index_of(site) {
                diagonal[i] = v;
            }
        }
        Ok(BoxOperator {
            lattice,
            potential,
            diagonal,
        })
    }

    pub fn free(lattice: LatticeBox) -> Self {
        Self::new(lattice, Potential::zero(lattice.dim())).expect("dimensions agree")
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Potential values in box order.
    pub fn potential_diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interval guaranteed to contain the spectrum:
    /// `[min(0, min V), 4d + max(0, max V)]` over the box.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let lo = self.diagonal.iter().fold(0.0f64, |m, &v| m.min(v));
        let hi = self.diagonal.iter().fold(0.0f64, |m, &v| m.max(v));
        (lo, 4.0 * self.lattice.dim() as f64 + hi)
    }

    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        apply_h0_into(&self.lattice, x, y);
        for ((yi, xi), v) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yi += v * xi;
        }
    }

    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        apply_h0_into(&self.lattice, x, y);
        for ((yi, xi), v) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yi += xi * *v;
        }
    }

    pub fn apply(&self, u: &LatticeField) -> Result<LatticeField> {
        if u.lattice() != &self.lattice {
            return Err(LabError::ShapeMismatch);
        }
        let mut out = LatticeField::zeros(self.lattice);
        self.apply_complex(u.values(), out.values_mut());
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_real(&e, &mut col);
            m.set_column(j, &nalgebra::DVector::from_column_slice(&col));
            e[j] = 0.0;
        }
        m
    }

    /// Band storage; only available without wrap-around couplings.
    pub fn to_band(&self) -> Result<SymBand> {
        if self.lattice.boundary() == Boundary::Periodic {
            return Err(LabError::Unsupported(
                "periodic boxes have no narrow band structure".into(),
            ));
        }
        let n = self.len();
        let dim = self.lattice.dim();
        let b = self.lattice.stride(0);
        let side = self.lattice.side();
        let mut band = SymBand::zeros(n, b);
        for i in 0..n {
            band.set(i, i, 2.0 * dim as f64 + self.diagonal[i]);
            for axis in 0..dim {
                let stride = self.lattice.stride(axis);
                if self.lattice.axis_position(i, axis) + 1 < side {
                    band.set(i, i + stride, -1.0);
                }
            }
        }
        Ok(band)
    }
}

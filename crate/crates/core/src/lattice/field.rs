use std::f64::consts::PI;

use num_complex::Complex64;

use super::{LatticeBox, Site};
use crate::error::{LabError, Result};

/// Complex-valued function on a finite box, indexed in the box's site order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    lattice: LatticeBox,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn zeros(lattice: LatticeBox) -> Self {
        LatticeField {
            lattice,
            values: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn from_values(lattice: LatticeBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(LabError::DimensionMismatch {
                expected: lattice.len(),
                got: values.len(),
            });
        }
        Ok(LatticeField { lattice, values })
    }

    pub fn from_real(lattice: LatticeBox, values: &[f64]) -> Result<Self> {
        Self::from_values(
            lattice,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn from_fn(lattice: LatticeBox, mut f: impl FnMut(&Site) -> Complex64) -> Self {
        let values = lattice.sites().map(|s| f(&s)).collect();
        LatticeField { lattice, values }
    }

    /// Kronecker delta at `site`.
    pub fn delta(lattice: LatticeBox, site: &Site) -> Result<Self> {
        let idx = lattice.index_of(site).ok_or_else(|| {
            LabError::Geometry(format!("site {site} is outside the box"))
        })?;
        let mut field = Self::zeros(lattice);
        field.values[idx] = Complex64::new(1.0, 0.0);
        Ok(field)
    }

    /// `exp(i xi . n)` for `xi = 2 pi k / L`, which is box-commensurate.
    pub fn plane_wave(lattice: LatticeBox, k: &[i64]) -> Result<Self> {
        if k.len() != lattice.dim() {
            return Err(LabError::DimensionMismatch {
                expected: lattice.dim(),
                got: k.len(),
            });
        }
        let side = lattice.side() as f64;
        let xi: Vec<f64> = k.iter().map(|&kj| 2.0 * PI * kj as f64 / side).collect();
        Ok(Self::from_fn(lattice, |n| {
            let phase: f64 = xi
                .iter()
                .zip(n.coords())
                .map(|(x, &c)| x * c as f64)
                .sum();
            Complex64::from_polar(1.0, phase)
        }))
    }

    /// Normalized Gaussian packet `exp(-|n - center|^2 / (2 width^2))`.
    pub fn gaussian(lattice: LatticeBox, center: &Site, width: f64) -> Self {
        let mut field = Self::from_fn(lattice, |n| {
            let r = n.dist(center);
            Complex64::new((-r * r / (2.0 * width * width)).exp(), 0.0)
        });
        let norm = field.norm();
        field.scale_mut(Complex64::new(1.0 / norm, 0.0));
        field
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, site: &Site) -> Option<Complex64> {
        self.lattice.index_of(site).map(|i| self.values[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other> = sum self(n) conj(other(n))`.
    pub fn inner(&self, other: &LatticeField) -> Result<Complex64> {
        self.check_same_box(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    pub fn scale_mut(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> LatticeField {
        let mut out = self.clone();
        out.scale_mut(c);
        out
    }

    pub fn sub(&self, other: &LatticeField) -> Result<LatticeField> {
        self.check_same_box(other)?;
        Ok(LatticeField {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `|self - other|_2` without allocating.
    pub fn distance(&self, other: &LatticeField) -> Result<f64> {
        self.check_same_box(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub(crate) fn check_same_box(&self, other: &LatticeField) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(LabError::ShapeMismatch);
        }
        Ok(())
    }
}

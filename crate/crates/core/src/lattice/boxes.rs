use serde::{Deserialize, Serialize};

use super::Site;
use crate::error::{LabError, Result};

/// Boundary rule for a finite box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Opposite faces are identified; H0 is diagonalized exactly by the DFT.
    Periodic,
    /// Restriction of H0 to the box: values outside are zero, the diagonal
    /// stays 2d.
    DirichletTruncation,
}

/// The cube `{n : |n|_inf <= radius}` in Z^d with a boundary rule.
///
/// Sites are enumerated lexicographically, so the flat index of `n` is
/// `sum_i (n_i + R) * L^(d-1-i)` with `L = 2R + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    radius: i64,
    boundary: Boundary,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: i64, boundary: Boundary) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::Config("dimension must be at least 1".into()));
        }
        if radius < 0 {
            return Err(LabError::Config(format!(
                "box radius must be nonnegative, got {radius}"
            )));
        }
        let side = (2 * radius + 1) as u128;
        if side.checked_pow(dim as u32).map_or(true, |n| n > usize::MAX as u128 / 64) {
            return Err(LabError::Config(format!(
                "box of radius {radius} in dimension {dim} is too large"
            )));
        }
        Ok(LatticeBox {
            dim,
            radius,
            boundary,
        })
    }

    pub fn periodic(dim: usize, radius: i64) -> Result<Self> {
        Self::new(dim, radius, Boundary::Periodic)
    }

    pub fn dirichlet(dim: usize, radius: i64) -> Result<Self> {
        Self::new(dim, radius, Boundary::DirichletTruncation)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of sites along one axis, `2R + 1`.
    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    /// Total number of sites, `(2R + 1)^d`.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.side().pow((self.dim - 1 - axis) as u32)
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.dim() == self.dim && site.norm_inf() <= self.radius
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let side = self.side();
        Some(
            site.coords()
                .iter()
                .fold(0usize, |acc, &c| acc * side + (c + self.radius) as usize),
        )
    }

    /// Index of `site` after wrapping it into the box (periodic identification).
    pub fn wrapped_index(&self, site: &Site) -> usize {
        let side = self.side() as i64;
        site.coords().iter().fold(0usize, |acc, &c| {
            acc * side as usize + (c + self.radius).rem_euclid(side) as usize
        })
    }

    pub fn site_at(&self, index: usize) -> Site {
        let side = self.side();
        let mut coords = vec![0i64; self.dim];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            coords[axis] = (rest % side) as i64 - self.radius;
            rest /= side;
        }
        Site::new(coords)
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    /// Position along `axis` (0..side) of the site with flat index `index`.
    #[inline]
    pub(crate) fn axis_position(&self, index: usize, axis: usize) -> usize {
        (index / self.stride(axis)) % self.side()
    }

    /// Bandwidth of the H0 matrix in the lexicographic ordering, for boxes
    /// without wrap-around couplings.
    pub fn bandwidth(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.stride(0)
        }
    }
}

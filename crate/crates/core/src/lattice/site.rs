use std::fmt;

use serde::{Deserialize, Serialize};

/// A point of the integer lattice Z^d.
///
/// Ordering is lexicographic on the coordinates, which is also the order in
/// which [`LatticeBox`](super::LatticeBox) enumerates its sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site {
    coords: Vec<i64>,
}

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        let coords = coords.into();
        assert!(!coords.is_empty(), "a site needs at least one coordinate");
        Site { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Site::new(vec![0; dim])
    }

    /// `k`-th unit vector in dimension `dim`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut coords = vec![0; dim];
        coords[axis] = 1;
        Site { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.coords
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_inf(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Euclidean distance to `other`.
    pub fn dist(&self, other: &Site) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| {
                let d = (a - b) as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim(), other.dim());
        Site {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim(), other.dim());
        Site {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, k: i64) -> Site {
        Site {
            coords: self.coords.iter().map(|c| c * k).collect(),
        }
    }

    /// Representative of the orbit under coordinate sign flips and
    /// permutations: absolute values sorted in decreasing order.
    pub fn canonical(&self) -> Site {
        let mut coords: Vec<i64> = self.coords.iter().map(|c| c.abs()).collect();
        coords.sort_unstable_by(|a, b| b.cmp(a));
        Site { coords }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Site {
    fn from(coords: Vec<i64>) -> Self {
        Site::new(coords)
    }
}

impl<const N: usize> From<[i64; N]> for Site {
    fn from(coords: [i64; N]) -> Self {
        Site::new(coords.to_vec())
    }
}

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BoxOperator;
use crate::error::{LabError, Result};
use crate::lattice::{Boundary, LatticeField};
use crate::linalg::{dot, orthonormalize, SymBand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Boxes with at most this many sites are diagonalized densely.
    pub dense_limit: usize,
    /// Required `|H v - λ v|` for unit `v`.
    pub residual_tolerance: f64,
    pub max_inverse_iterations: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            dense_limit: 200,
            residual_tolerance: 1e-8,
            max_inverse_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    Dense,
    /// Inertia-count bisection followed by shift-invert subspace iteration.
    SliceAndInvert,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: LatticeField,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct WindowSpectrum {
    /// Ascending, at most `k_max` entries.
    pub pairs: Vec<EigenPair>,
    /// Number of eigenvalues in the window, including any beyond `k_max`.
    pub total_in_window: usize,
    pub method: EigenMethod,
}

impl WindowSpectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().fold(0.0, |m, p| m.max(p.residual))
    }
}

/// All eigenpairs of the box matrix with eigenvalue in `[lo, hi)`, lowest
/// first, up to `k_max` of them.
pub fn eigs_in_window(op: &BoxOperator, lo: f64, hi: f64, k_max: usize) -> Result<WindowSpectrum> {
    eigs_in_window_with(op, lo, hi, k_max, &EigenConfig::default())
}

pub fn eigs_in_window_with(
    op: &BoxOperator,
    lo: f64,
    hi: f64,
    k_max: usize,
    config: &EigenConfig,
) -> Result<WindowSpectrum> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(LabError::Config(format!("invalid spectral window [{lo}, {hi})")));
    }
    if k_max == 0 {
        return Err(LabError::Config("k_max must be at least 1".into()));
    }
    let use_dense =
        op.len() <= config.dense_limit || op.lattice().boundary() == Boundary::Periodic;
    let (raw, total, method) = if use_dense {
        if op.len() > 4 * config.dense_limit.max(1000) {
            return Err(LabError::Unsupported(format!(
                "periodic box with {} sites exceeds the dense eigensolver limit",
                op.len()
            )));
        }
        let (raw, total) = dense_window(op, lo, hi, k_max);
        (raw, total, EigenMethod::Dense)
    } else {
        let band = op.to_band()?;
        let (raw, total) = slice_window(&band, lo, hi, k_max, config)?;
        (raw, total, EigenMethod::SliceAndInvert)
    };

    let mut pairs = Vec::with_capacity(raw.len());
    let mut hv = vec![0.0; op.len()];
    for (value, vector) in raw {
        op.apply_real(&vector, &mut hv);
        let residual = hv
            .iter()
            .zip(&vector)
            .map(|(a, b)| (a - value * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual > config.residual_tolerance {
            return Err(LabError::NonConvergence {
                what: "eigenpair",
                iterations: config.max_inverse_iterations,
                residual,
            });
        }
        pairs.push(EigenPair {
            value,
            vector: LatticeField::from_real(*op.lattice(), &vector)?,
            residual,
        });
    }
    Ok(WindowSpectrum {
        pairs,
        total_in_window: total,
        method,
    })
}

/// All eigenvalues of the box matrix, ascending, by dense diagonalization.
pub fn dense_eigenvalues(op: &BoxOperator) -> Vec<f64> {
    let mut values: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

type RawPairs = Vec<(f64, Vec<f64>)>;

fn dense_window(op: &BoxOperator, lo: f64, hi: f64, k_max: usize) -> (RawPairs, usize) {
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] >= lo && eig.eigenvalues[i] < hi)
        .collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let total = order.len();
    let raw = order
        .into_iter()
        .take(k_max)
        .map(|i| {
            (
                eig.eigenvalues[i],
                eig.eigenvectors.column(i).iter().copied().collect(),
            )
        })
        .collect();
    (raw, total)
}

struct Cluster {
    lo: f64,
    hi: f64,
    multiplicity: usize,
}

fn slice_window(
    band: &SymBand,
    lo: f64,
    hi: f64,
    k_max: usize,
    config: &EigenConfig,
) -> Result<(RawPairs, usize)> {
    let c_lo = band.count_below(lo);
    let c_hi = band.count_below(hi).max(c_lo);
    let total = c_hi - c_lo;
    let wanted_end = c_lo + total.min(k_max);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let width = 1e-12 * scale;

    let mut clusters = Vec::new();
    let mut stack = vec![(lo, c_lo, hi, c_hi)];
    while let Some((a, ca, b, cb)) = stack.pop() {
        if cb == ca || ca >= wanted_end {
            continue;
        }
        if b - a <= width {
            clusters.push(Cluster {
                lo: a,
                hi: b,
                multiplicity: cb - ca,
            });
            continue;
        }
        let mid = 0.5 * (a + b);
        let cm = band.count_below(mid).clamp(ca, cb);
        // Push the upper half first so lower clusters pop first.
        stack.push((mid, cm, b, cb));
        stack.push((a, ca, mid, cm));
    }
    clusters.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    // A bisection point can split a numerically degenerate level; such halves
    // must be iterated together to come out orthogonal.
    let mut merged: Vec<Cluster> = Vec::with_capacity(clusters.len());
    for c in clusters {
        match merged.last_mut() {
            Some(last) if c.lo - last.hi <= 1e-8 * scale => {
                last.hi = c.hi;
                last.multiplicity += c.multiplicity;
            }
            _ => merged.push(c),
        }
    }
    let clusters = merged;

    let mut raw = Vec::with_capacity(wanted_end - c_lo);
    for (index, cluster) in clusters.iter().enumerate() {
        let mut pairs = invert_cluster(band, cluster, index as u64, config)?;
        raw.append(&mut pairs);
    }
    raw.sort_by(|x, y| x.0.total_cmp(&y.0));
    raw.truncate(wanted_end - c_lo);
    Ok((raw, total))
}

/// Shift-invert subspace iteration at the centre of a bisection cluster,
/// with Rayleigh-Ritz extraction.
fn invert_cluster(
    band: &SymBand,
    cluster: &Cluster,
    seed: u64,
    config: &EigenConfig,
) -> Result<RawPairs> {
    let n = band.n();
    let m = cluster.multiplicity;
    let shift = 0.5 * (cluster.lo + cluster.hi);
    let lu = band.lu_shifted(shift);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ea5_e11d ^ seed);
    let mut basis: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut basis);

    let mut hv = vec![0.0; n];
    let mut worst = f64::INFINITY;
    for _ in 0..config.max_inverse_iterations {
        for v in basis.iter_mut() {
            lu.solve(v);
        }
        if !orthonormalize(&mut basis) {
            return Err(LabError::Breakdown(
                "inverse iteration collapsed the subspace".into(),
            ));
        }
        let images: Vec<Vec<f64>> = basis
            .iter()
            .map(|v| {
                band.matvec(v, &mut hv);
                hv.clone()
            })
            .collect();
        let projected = DMatrix::from_fn(m, m, |i, j| dot(&basis[i], &images[j]));
        let small = SymmetricEigen::new(projected);
        let mut rotated = Vec::with_capacity(m);
        worst = 0.0;
        for k in 0..m {
            let theta = small.eigenvalues[k];
            let mut v = vec![0.0; n];
            let mut w = vec![0.0; n];
            for i in 0..m {
                let c = small.eigenvectors[(i, k)];
                for t in 0..n {
                    v[t] += c * basis[i][t];
                    w[t] += c * images[i][t];
                }
            }
            let res = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - theta * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res);
            rotated.push((theta, v));
        }
        if worst <= 0.1 * config.residual_tolerance {
            return Ok(rotated);
        }
        basis = rotated.into_iter().map(|(_, v)| v).collect();
    }
    Err(LabError::NonConvergence {
        what: "shift-invert iteration",
        iterations: config.max_inverse_iterations,
        residual: worst,
    })
}

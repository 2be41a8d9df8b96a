use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::green::GreenKernel;
use crate::hamlab::{eigs_in_window, participation_ratio, BoxOperator};
use crate::lattice::{item_seed, sample_potential, sparse_support, LatticeBox, SparseRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillConfig {
    pub lambda0: f64,
    pub dim: usize,
    pub radius: i64,
    pub rule: SparseRule,
    pub realizations: usize,
    pub seed: u64,
    /// Amplitude bound; defaults to `coupling_bound_a(lambda0)`.
    #[serde(default)]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RealizationSummary {
    pub index: usize,
    pub seed: u64,
    /// Eigenvalues below 0, ascending.
    pub eigenvalues: Vec<f64>,
    pub participation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FillReport {
    pub lambda0: f64,
    /// Amplitudes are uniform on `[-a, 0]`.
    pub a: f64,
    pub radius: i64,
    pub support_size: usize,
    pub realizations: Vec<RealizationSummary>,
    /// Pooled eigenvalues in `[λ0, 0)`, ascending.
    pub pooled: Vec<f64>,
    /// Largest gap of the pooled values with `λ0` and `0` appended.
    pub largest_gap: f64,
    pub median_participation: Option<f64>,
    pub max_participation: Option<f64>,
    /// Lowest eigenvalue of any realization.
    pub empirical_min: Option<f64>,
    /// Eigenvalues below `λ0 - 1e-8`, over all realizations.
    pub below_lambda0: usize,
}

/// Slack allowed below `λ0` before an eigenvalue counts as a violation.
pub const LAMBDA0_SLACK: f64 = 1e-8;

/// Eigenvalues below 0 of random sparse potentials on a Dirichlet box,
/// pooled over realizations.
pub fn spectrum_fill_scan(kernel: &GreenKernel, config: &FillConfig) -> Result<FillReport> {
    if config.dim != kernel.dim() {
        return Err(LabError::DimensionMismatch {
            expected: kernel.dim(),
            got: config.dim,
        });
    }
    let a = match config.a {
        Some(a) if a.is_finite() && a > 0.0 => a,
        Some(a) => return Err(LabError::Config(format!("amplitude bound must be positive, got {a}"))),
        None => kernel.coupling_bound_a(config.lambda0)?,
    };
    let support = sparse_support(config.dim, &config.rule, config.radius)?;
    let lattice = LatticeBox::dirichlet(config.dim, config.radius)?;

    let realizations: Vec<RealizationSummary> = (0..config.realizations)
        .into_par_iter()
        .map(|index| {
            let seed = item_seed(config.seed, index as u64);
            let potential = sample_potential(config.dim, &support.sites, a, seed)?;
            let op = BoxOperator::new(lattice, potential)?;
            let (lower, _) = op.spectral_bounds();
            // Each negative bump adds at most one level below 0.
            let k_max = support.len() + 1;
            let spectrum = eigs_in_window(&op, lower - 1.0, 0.0, k_max)?;
            let participation = spectrum
                .pairs
                .iter()
                .map(|p| participation_ratio(&p.vector))
                .collect::<Result<Vec<_>>>()?;
            Ok(RealizationSummary {
                index,
                seed,
                eigenvalues: spectrum.values(),
                participation,
            })
        })
        .collect::<Result<_>>()?;

    let mut pooled = Vec::new();
    let mut pr = Vec::new();
    let mut below = 0;
    let mut min: Option<f64> = None;
    for r in &realizations {
        for (&value, &p) in r.eigenvalues.iter().zip(&r.participation) {
            min = Some(min.map_or(value, |m| m.min(value)));
            if value < config.lambda0 - LAMBDA0_SLACK {
                below += 1;
            }
            if value >= config.lambda0 {
                pooled.push(value);
                pr.push(p);
            }
        }
    }
    pooled.sort_by(f64::total_cmp);
    let mut edges = Vec::with_capacity(pooled.len() + 2);
    edges.push(config.lambda0);
    edges.extend_from_slice(&pooled);
    edges.push(0.0);
    let largest_gap = edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);

    Ok(FillReport {
        lambda0: config.lambda0,
        a,
        radius: config.radius,
        support_size: support.len(),
        realizations,
        pooled,
        largest_gap,
        median_participation: median(&mut pr.clone()),
        max_participation: pr.iter().copied().reduce(f64::max),
        empirical_min: min,
        below_lambda0: below,
    })
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    fn config(radius: i64, realizations: usize) -> FillConfig {
        FillConfig {
            lambda0: -1.0,
            dim: 1,
            radius,
            rule: SparseRule::PowerLaw {
                p: 2.0,
                symmetric: false,
            },
            realizations,
            seed: 7,
            a: None,
        }
    }

    #[test]
    fn empty_potential_has_no_negative_spectrum() {
        let kernel = GreenKernel::new(1);
        let mut c = config(50, 3);
        c.rule = SparseRule::Explicit { sites: vec![] };
        let report = spectrum_fill_scan(&kernel, &c).unwrap();
        assert!(report.pooled.is_empty());
        assert_eq!(report.largest_gap, 1.0);
        assert!(report.empirical_min.is_none());
        let none = spectrum_fill_scan(&kernel, &config(50, 0)).unwrap();
        assert!(none.pooled.is_empty());
    }

    #[test]
    fn reproducible_and_localized() {
        let kernel = GreenKernel::new(1);
        let a = spectrum_fill_scan(&kernel, &config(300, 4)).unwrap();
        let b = spectrum_fill_scan(&kernel, &config(300, 4)).unwrap();
        assert_eq!(a.pooled, b.pooled);
        assert!((a.a - 5f64.sqrt()).abs() < 1e-10);
        assert!(!a.pooled.is_empty());
        assert!(a.pooled.iter().all(|&l| (-1.0..0.0).contains(&l)));
        assert!(a.median_participation.unwrap() < 50.0);
    }

    #[test]
    fn gaps_shrink_with_more_bumps() {
        let kernel = GreenKernel::new(1);
        let small = spectrum_fill_scan(&kernel, &config(100, 6)).unwrap();
        let large = spectrum_fill_scan(&kernel, &config(1000, 6)).unwrap();
        assert!(large.pooled.len() > small.pooled.len());
        assert!(large.largest_gap < small.largest_gap);
    }

    #[test]
    fn median_of_small_sets() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0]), Some(2.5));
        let _ = Site::origin(1);
    }
}
